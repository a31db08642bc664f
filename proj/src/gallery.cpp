#include "harmsec/gallery.hpp"

#include <numbers>

#include "harmsec/error.hpp"

namespace harmsec {

namespace {

using std::numbers::pi;

std::vector<std::vector<Expr>> matrix(const std::vector<std::vector<std::string>>& m) {
  std::vector<std::vector<Expr>> out;
  for (const auto& row : m) {
    std::vector<Expr> r;
    for (const auto& s : row) r.push_back(parse(s));
    out.push_back(std::move(r));
  }
  return out;
}

Metric identity_metric(const Chart& c) {
  std::vector<std::vector<std::string>> m(c.dim(), std::vector<std::string>(c.dim(), "0"));
  for (int i = 0; i < c.dim(); ++i) m[i][i] = "1";
  return Metric(c, matrix(m));
}

std::vector<std::vector<Expr>> zero_lift(int r, int n) {
  return std::vector<std::vector<Expr>>(r, std::vector<Expr>(n, Expr::number(0)));
}

std::vector<Expectation> product_expectations() {
  return {{"affine", "residual 0", "elementary"},
          {"T", "identically 0", "stated"},
          {"A", "identically 0", "stated"},
          {"trC", "0 for every section", "stated"},
          {"map_iff_section", "for every section", "stated"}};
}

GalleryEntry product(int base_dim) {
  std::vector<std::string> names;
  std::vector<Interval> dom;
  for (int i = 0; i < base_dim; ++i) {
    names.push_back("x" + std::to_string(i + 1));
    dom.push_back({-pi, pi, true});
  }
  Chart base(names, dom);
  Metric g = identity_metric(base);
  Chart total = base.extended(Chart({"y"}, {{-4, 4}}));
  auto space = std::make_shared<const SubmersionSpace>(g, total, zero_lift(1, base_dim),
                                                       Connection::product(g, total));
  GalleryEntry e;
  e.space = space;
  e.expectations = product_expectations();
  if (base_dim == 1) {
    e.name = "product_s1";
    e.description = "flat circle times R with the product connection";
    e.source = "product manifold example, circle base";
    e.sections = {{"zero", {"0"}},
                  {"constant", {"1.5"}},
                  {"linear", {"0.5*x1 + 1"}},
                  {"sine", {"sin(x1)"}},
                  {"two_mode", {"sin(x1) + 0.5*sin(2*x1)"}},
                  {"cosine3", {"cos(3*x1)"}}};
  } else {
    e.name = "product";
    e.description = "flat 2-torus times R with the product connection";
    e.source = "product manifold example: T = 0, A = 0, tr C = 0, harmonic map iff harmonic section";
    e.sections = {{"zero", {"0"}},
                  {"constant", {"1.5"}},
                  {"linear", {"0.5*x1 - 0.25*x2 + 1"}},
                  {"sine", {"sin(x1)"}},
                  {"mixed", {"cos(x1)*sin(x2)"}},
                  {"wave", {"sin(x1 + 2*x2) + 0.3*cos(x2)"}}};
  }
  return e;
}

GalleryEntry tangent_bundle_flat() {
  Chart base({"x1", "x2"}, {{-pi, pi, true}, {-pi, pi, true}});
  Chart fiber({"y1", "y2"}, {{-2, 2}, {-2, 2}});
  auto space = std::make_shared<const SubmersionSpace>(SubmersionSpace::tangent_bundle(identity_metric(base), fiber));
  GalleryEntry e;
  e.name = "tangent_bundle_flat";
  e.description = "tangent bundle of the flat 2-torus with the horizontal lift connection";
  e.source = "tangent bundle example: T = 0, A = 0, tr D = 0, tr C given by the bracket trace";
  e.space = space;
  e.sections = {{"zero", {"0", "0"}},
                {"constant", {"1", "-0.5"}},
                {"linear", {"0.3*x1 + 0.2*x2", "-0.1*x1 + 0.4"}},
                {"trig", {"sin(x1)", "cos(x2)"}},
                {"diagonal_wave", {"cos(x1 + x2)", "0.5*sin(x1)"}},
                {"product_wave", {"sin(2*x1)*cos(x2)", "0"}}};
  e.expectations = {{"affine", "residual 0", "elementary"},
                    {"connection_relations", "all four lift relations hold", "stated"},
                    {"T", "identically 0", "stated"},
                    {"A", "identically 0", "stated"},
                    {"trD", "0 for every section", "stated"},
                    {"trC", "equals the bracket trace sum [e_i^H, v sigma_* e_i]", "stated"},
                    {"integrable", "horizontal distribution integrable", "computed"}};
  return e;
}

GalleryEntry blumenthal_flat() {
  Chart base({"x1", "x2"}, {{-2, 2}, {-2, 2}});
  Chart total = base.extended(Chart({"y"}, {{-4, 4}}));
  std::vector<std::vector<std::vector<Expr>>> zero(
      3, std::vector<std::vector<Expr>>(3, std::vector<Expr>(3, Expr::number(0))));
  auto space = std::make_shared<const SubmersionSpace>(identity_metric(base), total, matrix({{"0.5", "-0.3"}}),
                                                       Connection::from_table(total, zero));
  GalleryEntry e;
  e.name = "blumenthal_flat";
  e.description = "R^2 times R, flat total connection, constant horizontal lift (0.5, -0.3)";
  e.source = "affine submersion in the sense of Blumenthal: T_V W = 0, A_Y W = 0, h nabla_V H(X) = 0";
  e.space = space;
  e.sections = {{"zero", {"0"}},
                {"constant", {"-1"}},
                {"linear", {"0.5*x1 - 0.3*x2 + 0.2"}},
                {"quadratic", {"x1^2 - x2^2"}},
                {"sine", {"sin(x1)"}},
                {"mixed", {"cos(x1)*sin(x2)"}}};
  e.expectations = {{"affine", "residual 0", "stated"},
                    {"blumenthal", "all three residuals 0", "stated"},
                    {"skew", "passes", "stated"},
                    {"map_iff_section", "for every section", "stated"}};
  return e;
}

GalleryEntry hopf() {
  Chart base({"th", "ph"}, {{0.05, pi - 0.05}, {-pi, pi, true}});
  Chart total = base.extended(Chart({"ps"}, {{-2 * pi, 2 * pi, true}}));
  Metric gb(base, matrix({{"1/4", "0"}, {"0", "sin(th)^2/4"}}));
  Metric gE(total, matrix({{"1/4", "0", "0"}, {"0", "1/4", "cos(th)/4"}, {"0", "cos(th)/4", "1/4"}}));
  auto space = std::make_shared<const SubmersionSpace>(gb, gE, Connection::from_metric(gE));
  GalleryEntry e;
  e.name = "hopf";
  e.description = "Hopf fibration S^3 -> S^2(1/2) in Euler angles, Levi-Civita total connection";
  e.source = "Riemannian submersion example: totally geodesic fibres, A_X Y = v[X,Y]/2, non-integrable HE";
  e.space = space;
  e.sections = {{"zero", {"0"}},
                {"constant", {"1"}},
                {"cos_theta", {"0.3*cos(th)"}},
                {"linear", {"0.2*th - 0.1"}},
                {"linear_phi", {"0.5*ph"}},
                {"mixed", {"sin(2*th)*cos(ph)"}},
                {"sine_phi", {"0.4*sin(ph)"}}};
  e.expectations = {{"affine", "passes", "stated"},
                    {"skew", "passes", "stated"},
                    {"T", "identically 0 (totally geodesic fibres)", "stated"},
                    {"A_half_bracket", "A_X Y = v[X,Y]/2 on horizontal pairs", "stated"},
                    {"integrable", "fails: HE is not integrable", "computed"},
                    {"A_norm", "|A_{H(e1)}H(e2)| = 2 in coordinates, constant", "computed"},
                    {"blumenthal", "fails on A_Y W", "computed"}};
  return e;
}

}  // namespace

Section make_section(std::shared_ptr<const SubmersionSpace> space, const std::vector<std::string>& components,
                     std::string name) {
  std::vector<Expr> e;
  for (const auto& c : components) e.push_back(parse(c));
  return Section(std::move(space), std::move(e), std::move(name));
}

Section GalleryEntry::section(std::string_view n) const {
  for (const auto& s : sections)
    if (s.name == n) return make_section(space, s.components, s.name);
  throw Error(ErrorCode::InvalidArgument, "gallery entry '" + name + "' has no section '" + std::string(n) + "'");
}

Section GalleryEntry::section(std::size_t index) const {
  const auto& s = sections.at(index);
  return make_section(space, s.components, s.name);
}

const std::vector<std::string>& gallery_names() {
  static const std::vector<std::string> names = {"product", "tangent_bundle_flat", "blumenthal_flat", "hopf",
                                                 "product_s1"};
  return names;
}

bool gallery_listed(std::string_view name) { return name != "product_s1"; }

GalleryEntry instantiate(std::string_view name) {
  if (name == "product") return product(2);
  if (name == "product_s1") return product(1);
  if (name == "tangent_bundle_flat") return tangent_bundle_flat();
  if (name == "blumenthal_flat") return blumenthal_flat();
  if (name == "hopf") return hopf();
  throw Error(ErrorCode::UnknownGalleryName, "unknown gallery entry '" + std::string(name) + "'");
}

GalleryEntry broken_variant(std::string_view name, double eps) {
  GalleryEntry e = instantiate(name);
  if (eps == 0.0) return e;
  const auto& s = *e.space;
  bool fibre_slot = name == "hopf" || name == "blumenthal_flat";
  int k = fibre_slot ? s.n() : 0;
  e.space = std::make_shared<const SubmersionSpace>(s.with_connection(s.connection().perturbed(k, 0, eps)));
  e.perturbation = eps;
  e.name = std::string(name);
  e.description += " (broken: connection coefficient perturbed)";
  e.expectations = {{fibre_slot ? "skew" : "affine", "fails", "computed"}};
  return e;
}

}  // namespace harmsec
