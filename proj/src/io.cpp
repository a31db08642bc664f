#include "harmsec/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "harmsec/error.hpp"

namespace harmsec {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::InvalidGeometry, "geometry file: " + path + ": " + what);
}

// Runs f, prefixing any library error with the field path.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), "geometry file: " + path + ": " + e.what());
  }
}

const json& field(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "missing");
  return *it;
}

std::string str(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

Expr expression(const json& v, const std::string& path, const std::set<std::string>& allowed) {
  std::string s = str(v, path);
  Expr e = at_path(path, [&] { return parse(s); });
  for (const auto& name : e.free_variables())
    if (!allowed.count(name)) fail(path, "'" + name + "' is not a declared coordinate here");
  return e;
}

std::vector<Expr> expression_row(const json& v, const std::string& path, std::size_t len,
                                 const std::set<std::string>& allowed) {
  if (!v.is_array()) fail(path, "expected an array");
  if (v.size() != len) fail(path, "expected " + std::to_string(len) + " entries, found " + std::to_string(v.size()));
  std::vector<Expr> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(expression(v[i], path + "/" + std::to_string(i), allowed));
  return out;
}

std::vector<std::vector<Expr>> expression_matrix(const json& v, const std::string& path, std::size_t rows,
                                                 std::size_t cols, const std::set<std::string>& allowed) {
  if (!v.is_array()) fail(path, "expected an array");
  if (v.size() != rows) fail(path, "expected " + std::to_string(rows) + " rows, found " + std::to_string(v.size()));
  std::vector<std::vector<Expr>> out;
  for (std::size_t i = 0; i < rows; ++i)
    out.push_back(expression_row(v[i], path + "/" + std::to_string(i), cols, allowed));
  return out;
}

Chart chart(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of coordinates");
  std::vector<std::string> names;
  std::vector<Interval> dom;
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::string p = path + "/" + std::to_string(i);
    names.push_back(str(field(v[i], p, "name"), p + "/name"));
    Interval iv;
    iv.lo = number(field(v[i], p, "lo"), p + "/lo");
    iv.hi = number(field(v[i], p, "hi"), p + "/hi");
    if (auto it = v[i].find("periodic"); it != v[i].end()) {
      if (!it->is_boolean()) fail(p + "/periodic", "expected a boolean");
      iv.periodic = it->get<bool>();
    }
    dom.push_back(iv);
  }
  return at_path(path, [&] { return Chart(names, dom); });
}

std::set<std::string> name_set(const Chart& c) { return {c.names().begin(), c.names().end()}; }

ordered_json chart_json(const Chart& c, int from, int to) {
  ordered_json out = ordered_json::array();
  for (int i = from; i < to; ++i) {
    ordered_json co;
    co["name"] = c.names()[i];
    co["lo"] = c.domain()[i].lo;
    co["hi"] = c.domain()[i].hi;
    co["periodic"] = c.domain()[i].periodic;
    out.push_back(co);
  }
  return out;
}

ordered_json metric_json(const Metric& m) {
  ordered_json out = ordered_json::array();
  for (int i = 0; i < m.dim(); ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.dim(); ++j) row.push_back(m.component(i, j).to_string());
    out.push_back(row);
  }
  return out;
}

std::vector<Expr> split_components(const std::string& selector) {
  std::vector<Expr> out;
  std::stringstream ss(selector);
  std::string part;
  while (std::getline(ss, part, ';')) out.push_back(parse(part));
  return out;
}

}  // namespace

Geometry load_geometry(const json& doc) {
  if (!doc.is_object()) fail("", "expected a JSON object");
  if (str(field(doc, "", "schema"), "/schema") != kGeometrySchema)
    fail("/schema", std::string("expected \"") + kGeometrySchema + "\"");
  Geometry g;
  g.name = doc.contains("name") ? str(doc["name"], "/name") : "unnamed";
  if (doc.contains("description")) g.description = str(doc["description"], "/description");

  const json& base = field(doc, "", "base");
  Chart bchart = chart(field(base, "/base", "coordinates"), "/base/coordinates");
  const auto n = static_cast<std::size_t>(bchart.dim());
  auto bmetric = expression_matrix(field(base, "/base", "metric"), "/base/metric", n, n, name_set(bchart));
  Metric gb = at_path("/base/metric", [&] { return Metric(bchart, bmetric); });

  Chart fchart = chart(field(field(doc, "", "fiber"), "/fiber", "coordinates"), "/fiber/coordinates");
  Chart total = at_path("/fiber/coordinates", [&] { return bchart.extended(fchart); });
  const auto N = static_cast<std::size_t>(total.dim());
  const auto tnames = name_set(total);

  std::optional<Metric> gE;
  if (doc.contains("total_metric")) {
    auto m = expression_matrix(doc["total_metric"], "/total_metric", N, N, tnames);
    gE = at_path("/total_metric", [&] { return Metric(total, m); });
  }

  const json& lift = field(doc, "", "lift");
  const json& conn = field(doc, "", "connection");
  Connection connection;
  bool tangent = lift.is_string() && lift.get<std::string>() == "tangent-bundle";
  if (conn.is_string()) {
    std::string d = conn.get<std::string>();
    if (d == "levi-civita") {
      if (!gE) fail("/connection", "levi-civita requires total_metric");
      connection = Connection::from_metric(*gE);
    } else if (d == "product") {
      connection = at_path("/connection", [&] { return Connection::product(gb, total); });
    } else if (d == "horizontal-lift") {
      if (!tangent) fail("/connection", "horizontal-lift requires lift \"tangent-bundle\"");
      connection = at_path("/connection", [&] { return Connection::horizontal_lift(gb, total); });
    } else {
      fail("/connection", "unknown directive '" + d + "'");
    }
  } else {
    const json& t = field(conn, "/connection", "table");
    if (!t.is_array() || t.size() != N) fail("/connection/table", "expected " + std::to_string(N) + " blocks");
    std::vector<std::vector<std::vector<Expr>>> table;
    for (std::size_t k = 0; k < N; ++k)
      table.push_back(expression_matrix(t[k], "/connection/table/" + std::to_string(k), N, N, tnames));
    connection = at_path("/connection/table", [&] { return Connection::from_table(total, table); });
  }
  if (tangent && connection.kind() != Connection::Kind::HorizontalLift)
    fail("/connection", "lift \"tangent-bundle\" requires connection \"horizontal-lift\"");

  if (doc.contains("perturbations")) {
    const json& ps = doc["perturbations"];
    if (!ps.is_array()) fail("/perturbations", "expected an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      std::string p = "/perturbations/" + std::to_string(i);
      auto k = total.index_of(str(field(ps[i], p, "upper"), p + "/upper"));
      auto l = total.index_of(str(field(ps[i], p, "lower"), p + "/lower"));
      if (!k) fail(p + "/upper", "not a coordinate");
      if (!l) fail(p + "/lower", "not a coordinate");
      connection = connection.perturbed(*k, *l, number(field(ps[i], p, "eps"), p + "/eps"));
    }
  }

  if (lift.is_string()) {
    std::string d = lift.get<std::string>();
    if (d == "from-metric") {
      if (!gE) fail("/lift", "from-metric requires total_metric");
      g.space = at_path("/lift", [&] { return std::make_shared<const SubmersionSpace>(gb, *gE, connection); });
    } else if (d == "tangent-bundle") {
      g.space = at_path("/lift", [&] {
        return std::make_shared<const SubmersionSpace>(
            SubmersionSpace::tangent_bundle(gb, fchart).with_connection(connection));
      });
    } else {
      fail("/lift", "unknown directive '" + d + "'");
    }
  } else {
    auto h = expression_matrix(lift, "/lift", N - n, n, tnames);
    g.space = at_path("/lift", [&] { return std::make_shared<const SubmersionSpace>(gb, total, h, connection); });
  }

  if (doc.contains("sections")) {
    const json& ss = doc["sections"];
    if (!ss.is_array()) fail("/sections", "expected an array");
    const auto bnames = name_set(bchart);
    for (std::size_t i = 0; i < ss.size(); ++i) {
      std::string p = "/sections/" + std::to_string(i);
      NamedSection s;
      s.name = str(field(ss[i], p, "name"), p + "/name");
      auto comps = expression_row(field(ss[i], p, "components"), p + "/components", N - n, bnames);
      for (const auto& c : comps) s.components.push_back(c.to_string());
      g.sections.push_back(std::move(s));
    }
  }
  return g;
}

Geometry load_geometry_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidGeometry, std::string("geometry file: not valid JSON: ") + e.what());
  }
  return load_geometry(doc);
}

Geometry load_geometry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_geometry_text(ss.str());
}

Geometry from_gallery(const GalleryEntry& e) { return {e.name, e.description, e.space, e.sections}; }

ordered_json export_geometry(const Geometry& g) {
  const auto& S = *g.space;
  const Chart& total = S.total_chart();
  ordered_json doc;
  doc["schema"] = kGeometrySchema;
  doc["name"] = g.name;
  doc["description"] = g.description;
  doc["base"]["coordinates"] = chart_json(total, 0, S.n());
  doc["base"]["metric"] = metric_json(S.base_metric());
  doc["fiber"]["coordinates"] = chart_json(total, S.n(), S.dim());

  const auto& conn = S.connection();
  std::optional<Metric> gE = S.total_metric();
  if (conn.kind() == Connection::Kind::LeviCivita) {
    if (gE && metric_json(*gE) != metric_json(conn.metric()))
      throw Error(ErrorCode::InvalidGeometry, "cannot export: connection metric differs from the total metric");
    gE = conn.metric();
  }
  if (gE) doc["total_metric"] = metric_json(*gE);

  switch (S.lift_kind()) {
    case SubmersionSpace::LiftKind::FromMetric: doc["lift"] = "from-metric"; break;
    case SubmersionSpace::LiftKind::TangentBundle: doc["lift"] = "tangent-bundle"; break;
    case SubmersionSpace::LiftKind::Explicit: {
      ordered_json rows = ordered_json::array();
      for (const auto& row : S.lift_expressions()) {
        ordered_json r = ordered_json::array();
        for (const auto& e : row) r.push_back(e.to_string());
        rows.push_back(r);
      }
      doc["lift"] = rows;
      break;
    }
  }

  switch (conn.kind()) {
    case Connection::Kind::LeviCivita: doc["connection"] = "levi-civita"; break;
    case Connection::Kind::Product: doc["connection"] = "product"; break;
    case Connection::Kind::HorizontalLift: doc["connection"] = "horizontal-lift"; break;
    case Connection::Kind::Table: {
      ordered_json t = ordered_json::array();
      for (const auto& block : conn.table()) {
        ordered_json b = ordered_json::array();
        for (const auto& row : block) {
          ordered_json r = ordered_json::array();
          for (const auto& e : row) r.push_back(e.to_string());
          b.push_back(r);
        }
        t.push_back(b);
      }
      doc["connection"]["table"] = t;
      break;
    }
  }
  if (!conn.perturbations().empty()) {
    ordered_json ps = ordered_json::array();
    for (const auto& p : conn.perturbations())
      ps.push_back({{"upper", total.names()[p.k]}, {"lower", total.names()[p.i]}, {"eps", p.eps}});
    doc["perturbations"] = ps;
  }
  ordered_json ss = ordered_json::array();
  for (const auto& s : g.sections) ss.push_back({{"name", s.name}, {"components", s.components}});
  doc["sections"] = ss;
  return doc;
}

Section resolve_section(const Geometry& g, const std::string& selector) {
  for (const auto& s : g.sections)
    if (s.name == selector) return make_section(g.space, s.components, s.name);
  return Section(g.space, split_components(selector), selector);
}

}  // namespace harmsec
