#include <doctest.h>

#include <cmath>
#include <set>

#include "harmsec/error.hpp"
#include "harmsec/gallery.hpp"

using namespace harmsec;

TEST_CASE("gallery names") {
  const auto& names = gallery_names();
  int listed = 0;
  for (const auto& n : names) listed += gallery_listed(n);
  CHECK(listed == 4);
  for (const char* n : {"product", "tangent_bundle_flat", "blumenthal_flat", "hopf"}) CHECK(gallery_listed(n));
  try {
    instantiate("klein_bottle");
    FAIL("expected UnknownGalleryName");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownGalleryName);
  }
  CHECK_THROWS_AS(broken_variant("klein_bottle", 0.1), Error);
}

TEST_CASE("entries are complete and valid at construction") {
  const std::set<std::string> bases{"stated", "elementary", "computed"};
  for (const auto& name : gallery_names()) {
    CAPTURE(name);
    auto e = instantiate(name);
    CHECK(e.name == name);
    CHECK_FALSE(e.description.empty());
    CHECK_FALSE(e.source.empty());
    CHECK(e.sections.size() >= 5);
    CHECK_FALSE(e.expectations.empty());
    for (const auto& x : e.expectations) CHECK(bases.count(x.basis) == 1);
    CHECK(check_affine(*e.space).pass());
    CHECK(e.space->connection().at(e.space->total_chart().center()).asymmetry() < 1e-12);

    bool has_constant = false, has_nonharmonic = false;
    for (std::size_t i = 0; i < e.sections.size(); ++i) {
      auto s = e.section(i);
      if (e.sections[i].name == "constant") has_constant = true;
      if (!classify(s).harmonic_section) has_nonharmonic = true;
    }
    CHECK(has_constant);
    CHECK(has_nonharmonic);
    CHECK_THROWS_AS(e.section("no_such_section"), Error);
  }
}

TEST_CASE("stated expectations hold") {
  SUBCASE("product") {
    for (const char* name : {"product", "product_s1"}) {
      auto e = instantiate(name);
      CHECK(check_affine(*e.space)["affine"].max == 0.0);
      CHECK(check_blumenthal(*e.space).pass());
      for (const auto& ns : e.sections) {
        auto r = classify(e.section(ns.name));
        CHECK(r.max_tr_C[static_cast<int>(CConvention::Pullback)] <= 1e-10);
        CHECK(r.harmonic_map == r.harmonic_section);
      }
    }
  }
  SUBCASE("tangent bundle") {
    auto e = instantiate("tangent_bundle_flat");
    CHECK(check_horizontal_integrability(*e.space).pass());
    for (const auto& ns : e.sections) {
      auto r = classify(e.section(ns.name));
      CHECK(r.max_tr_D <= 1e-10);
    }
  }
  SUBCASE("blumenthal") {
    auto e = instantiate("blumenthal_flat");
    auto b = check_blumenthal(*e.space);
    CHECK(b.pass());
    CHECK(check_skew(*e.space).pass());
    for (const auto& ns : e.sections) {
      auto r = classify(e.section(ns.name));
      CHECK(r.harmonic_map == r.harmonic_section);
    }
  }
  SUBCASE("hopf") {
    auto e = instantiate("hopf");
    CHECK(check_skew(*e.space).pass());
    CHECK_FALSE(check_horizontal_integrability(*e.space).pass());
    CHECK_FALSE(check_blumenthal(*e.space).pass());
    CHECK(check_blumenthal(*e.space)["T_V_W"].pass);
  }
}

TEST_CASE("tangent bundle connection relations") {
  auto e = instantiate("tangent_bundle_flat");
  const auto& S = *e.space;
  const auto& total = S.total_chart();
  // Base fields X, Y and their lifts; the base is flat so ∇_X Y = X(Y).
  std::vector<std::string> X{"sin(x1)", "x2*cos(x1)"}, Y{"cos(x2)", "0.5*x1*x2"};
  auto field = [&](const std::vector<std::string>& a, bool vertical) {
    std::vector<Expr> c(4, parse("0"));
    for (int i = 0; i < 2; ++i) c[(vertical ? 2 : 0) + i] = parse(a[i]);
    return VectorField(total, c);
  };
  VectorField base_x(S.base_chart(), {parse(X[0]), parse(X[1])});
  VectorField base_y(S.base_chart(), {parse(Y[0]), parse(Y[1])});
  for (const auto& p : total.samples()) {
    Vec x = p.head(2);
    // Horizontal lift over a flat base has no fibre part.
    CHECK(S.lift(p).norm() < 1e-12);
    Vec nxy = covariant_derivative(Connection::from_metric(S.base_metric()), base_x, base_y, x).v;
    auto vv = covariant_derivative(S.connection(), field(X, true), field(Y, true), p).v;
    auto vh = covariant_derivative(S.connection(), field(X, true), field(Y, false), p).v;
    auto hv = covariant_derivative(S.connection(), field(X, false), field(Y, true), p).v;
    auto hh = covariant_derivative(S.connection(), field(X, false), field(Y, false), p).v;
    Vec up_v = Vec::Zero(4), up_h = Vec::Zero(4);
    up_v.tail(2) = nxy;
    up_h.head(2) = nxy;
    CHECK(vv.norm() < 1e-12);
    CHECK(vh.norm() < 1e-12);
    CHECK((hv - up_v).norm() < 1e-12);
    CHECK((hh - up_h).norm() < 1e-12);
  }
}

TEST_CASE("hopf lift and A norm") {
  auto e = instantiate("hopf");
  const auto& S = *e.space;
  double lo = 1e300, hi = 0;
  for (const auto& p : S.total_chart().samples()) {
    double th = p[0];
    Mat h = S.lift(p);
    CHECK(std::abs(h(0, 0)) < 1e-12);
    CHECK(std::abs(h(0, 1) + std::cos(th)) < 1e-12);
    Vec e1 = Vec::Zero(2), e2 = Vec::Zero(2);
    e1[0] = 2;
    e2[1] = 2 / std::sin(th);
    auto a = S.oneill_A(p, S.horizontal_field(p, e1), S.horizontal_field(p, e2));
    lo = std::min(lo, a.norm());
    hi = std::max(hi, a.norm());
  }
  CHECK(hi - lo < 1e-10);
  CHECK(lo == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("broken variants") {
  for (const auto& name : gallery_names()) {
    CAPTURE(name);
    auto same = broken_variant(name, 0);
    auto plain = instantiate(name);
    CHECK(same.perturbation == 0);
    auto a = check_affine(*same.space), b = check_affine(*plain.space);
    CHECK(a["affine"].max == b["affine"].max);
    CHECK(check_skew(*same.space)["skew"].max == check_skew(*plain.space)["skew"].max);

    auto broken = broken_variant(name, 0.1);
    CHECK(broken.perturbation == 0.1);
    bool fibre = name == "hopf" || name == "blumenthal_flat";
    if (fibre) {
      CHECK(check_skew(*broken.space)["skew"].max >= 1e-2);
    } else {
      CHECK(check_affine(*broken.space)["affine"].max >= 1e-2);
    }
  }
}
