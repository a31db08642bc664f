#include "harmsec/harmsec.h"

#include <cstring>
#include <set>

#include "harmsec/error.hpp"
#include "harmsec/report.hpp"

using namespace harmsec;
using nlohmann::json;

struct hs_space {
  Geometry geometry;
};

struct hs_section {
  Geometry geometry;
  Section section;
};

namespace {

thread_local std::string last_error;

hs_status set_error(hs_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
hs_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return HS_OK;
  } catch (const Error& e) {
    return set_error(static_cast<hs_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(HS_INVALID_ARGUMENT, std::string("options: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(HS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(HS_INTERNAL, e.what());
  }
}

char* copy(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is null");
}

json options_object(const char* text, const std::set<std::string>& keys) {
  if (!text || !*text) return json::object();
  json o = json::parse(text);
  if (!o.is_object()) throw Error(ErrorCode::InvalidArgument, "options must be a JSON object");
  for (const auto& [k, v] : o.items())
    if (!keys.count(k)) throw Error(ErrorCode::InvalidArgument, "unknown option '" + k + "'");
  return o;
}

template <class T>
void read(const json& o, const char* key, T& into) {
  if (o.contains(key)) into = o.at(key).get<T>();
}

VerifyOptions verify_options(const char* text) {
  auto o = options_object(text, {"samples", "tolerance", "strict_skew", "workers", "timing"});
  VerifyOptions v;
  read(o, "samples", v.samples);
  read(o, "tolerance", v.tolerance);
  read(o, "strict_skew", v.strict_skew);
  read(o, "workers", v.workers);
  read(o, "timing", v.timing);
  if (v.samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be positive");
  if (!(v.tolerance > 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  return v;
}

SimulateOptions simulate_options(const char* text) {
  auto o = options_object(text, {"horizon", "dt", "paths", "seed", "workers", "fiber_index", "form", "x0",
                                 "tolerance", "timing"});
  SimulateOptions s;
  read(o, "horizon", s.horizon);
  read(o, "dt", s.dt);
  read(o, "paths", s.paths);
  read(o, "seed", s.seed);
  read(o, "workers", s.workers);
  read(o, "fiber_index", s.fiber_index);
  read(o, "form", s.form);
  if (o.contains("x0")) s.x0 = o.at("x0").get<std::vector<double>>();
  read(o, "tolerance", s.tolerance);
  read(o, "timing", s.timing);
  if (s.paths < 1) throw Error(ErrorCode::InvalidArgument, "paths must be positive");
  return s;
}

FlowRunOptions flow_options(const char* text) {
  auto o = options_object(text, {"grid", "dt", "steps", "record_every", "workers", "energy_slack", "timing"});
  FlowRunOptions f;
  read(o, "grid", f.flow.grid);
  read(o, "dt", f.flow.dt);
  read(o, "steps", f.flow.steps);
  read(o, "record_every", f.flow.record_every);
  read(o, "workers", f.flow.workers);
  read(o, "energy_slack", f.flow.energy_slack);
  read(o, "timing", f.timing);
  return f;
}

hs_status run(const hs_section* s, char** report, int* exit_code, RunOutcome (*fn)(const hs_section*, const char*),
              const char* options) {
  return guarded([&] {
    require(s, "section");
    require(report, "report");
    require(exit_code, "exit_code");
    auto out = fn(s, options);
    *report = copy(dump_report(out.report));
    *exit_code = out.exit_code;
  });
}

}  // namespace

extern "C" {

const char* hs_version(void) { return version_string(); }

const char* hs_status_name(hs_status status) {
  if (status == HS_OK) return "Ok";
  if (status == HS_INTERNAL) return "Internal";
  if (status >= HS_SYNTAX && status <= HS_IO) return error_code_name(static_cast<ErrorCode>(status));
  return "Unknown";
}

const char* hs_last_error(void) { return last_error.c_str(); }

void hs_string_free(char* s) { std::free(s); }

size_t hs_gallery_count(void) { return gallery_names().size(); }

const char* hs_gallery_name(size_t index) {
  const auto& n = gallery_names();
  return index < n.size() ? n[index].c_str() : nullptr;
}

hs_status hs_gallery_list_json(int verbose, int all, char** out) {
  return guarded([&] {
    require(out, "out");
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& name : gallery_names()) {
      if (!all && !gallery_listed(name)) continue;
      auto e = instantiate(name);
      nlohmann::ordered_json item{{"name", e.name}, {"description", e.description}, {"source", e.source}};
      if (verbose) {
        nlohmann::ordered_json ex = nlohmann::ordered_json::array();
        for (const auto& x : e.expectations)
          ex.push_back({{"property", x.property}, {"expected", x.expected}, {"basis", x.basis}});
        item["expectations"] = ex;
        nlohmann::ordered_json secs = nlohmann::ordered_json::array();
        for (const auto& s : e.sections) secs.push_back({{"name", s.name}, {"components", s.components}});
        item["sections"] = secs;
      }
      list.push_back(item);
    }
    *out = copy(list.dump(2) + "\n");
  });
}

hs_status hs_space_from_gallery(const char* name, double eps, hs_space** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new hs_space{from_gallery(broken_variant(name, eps))};
  });
}

hs_status hs_space_from_json(const char* text, hs_space** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new hs_space{load_geometry_text(text)};
  });
}

hs_status hs_space_from_file(const char* path, hs_space** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new hs_space{load_geometry_file(path)};
  });
}

hs_status hs_space_export_json(const hs_space* space, char** out) {
  return guarded([&] {
    require(space, "space");
    require(out, "out");
    *out = copy(export_geometry(space->geometry).dump(2) + "\n");
  });
}

hs_status hs_space_dims(const hs_space* space, int* base_dim, int* fiber_dim) {
  return guarded([&] {
    require(space, "space");
    if (base_dim) *base_dim = space->geometry.space->n();
    if (fiber_dim) *fiber_dim = space->geometry.space->r();
  });
}

void hs_space_free(hs_space* space) { delete space; }

hs_status hs_section_create(const hs_space* space, const char* selector, hs_section** out) {
  return guarded([&] {
    require(space, "space");
    require(selector, "selector");
    require(out, "out");
    Section s = resolve_section(space->geometry, selector);
    *out = new hs_section{space->geometry, std::move(s)};
  });
}

void hs_section_free(hs_section* section) { delete section; }

hs_status hs_tension(const hs_section* s, const double* x, double* tau, double* tau_v) {
  return guarded([&] {
    require(s, "section");
    require(x, "x");
    const int n = s->section.space().n(), N = s->section.space().dim();
    Vec p = Eigen::Map<const Vec>(x, n);
    if (tau) Eigen::Map<Vec>(tau, N) = tension(s->section, p).total();
    if (tau_v) Eigen::Map<Vec>(tau_v, N) = tension_v(s->section, p);
  });
}

hs_status hs_verify(const hs_section* section, const char* options, char** report, int* exit_code) {
  return run(section, report, exit_code,
             [](const hs_section* s, const char* o) { return run_verify(s->geometry, s->section, verify_options(o)); },
             options);
}

hs_status hs_simulate(const hs_section* section, const char* options, char** report, int* exit_code) {
  return run(section, report, exit_code,
             [](const hs_section* s, const char* o) {
               return run_simulate(s->geometry, s->section, simulate_options(o));
             },
             options);
}

hs_status hs_flow(const hs_section* section, const char* options, char** report, int* exit_code) {
  return run(section, report, exit_code,
             [](const hs_section* s, const char* o) { return run_flow(s->geometry, s->section, flow_options(o)); },
             options);
}

hs_status hs_diagnostics_csv(const hs_section* s, const char* options, char** out) {
  return guarded([&] {
    require(s, "section");
    require(out, "out");
    *out = copy(diagnostics_csv(s->section, verify_options(options)));
  });
}

hs_status hs_paths_csv(const hs_section* s, const char* options, char** out) {
  return guarded([&] {
    require(s, "section");
    require(out, "out");
    *out = copy(paths_csv(s->geometry, simulate_options(options)));
  });
}

}  // extern "C"
