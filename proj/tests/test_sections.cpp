#include <doctest.h>

#include <cmath>
#include <numbers>

#include "harmsec/error.hpp"
#include "harmsec/flow.hpp"
#include "harmsec/gallery.hpp"

using namespace harmsec;
using std::numbers::pi;

namespace {

const char* kSpaces[] = {"product", "product_s1", "tangent_bundle_flat", "blumenthal_flat", "hopf"};

std::shared_ptr<const SubmersionSpace> line_space(const std::string& lift, const std::string& gamma_yxx = "0") {
  Chart base({"x"}, {{-2, 2}});
  Chart total = base.extended(Chart({"y"}, {{-3, 3}}));
  Metric g(base, {{parse("1")}});
  std::vector<std::vector<std::vector<Expr>>> t(2, std::vector<std::vector<Expr>>(2, std::vector<Expr>(2, parse("0"))));
  t[1][0][0] = parse(gamma_yxx);
  return std::make_shared<const SubmersionSpace>(g, total, std::vector<std::vector<Expr>>{{parse(lift)}},
                                                 Connection::from_table(total, t));
}

// Tension of the map x ↦ σ(x) by central differences of the section and
// of the metrics, with no use of the library's derivative machinery.
Vec fd_tension(const Section& s, const Vec& x) {
  const auto& S = s.space();
  const int n = S.n(), N = S.dim();
  const double h = 1e-4;
  auto sig = [&](const Vec& q) { return s.point(q); };
  Mat d1(N, n);
  std::vector<Mat> d2(N, Mat(n, n));
  for (int i = 0; i < n; ++i) {
    Vec ei = Vec::Unit(n, i) * h;
    d1.col(i) = (sig(x + ei) - sig(x - ei)) / (2 * h);
    for (int j = 0; j < n; ++j) {
      Vec ej = Vec::Unit(n, j) * h;
      Vec v = (sig(x + ei + ej) - sig(x + ei - ej) - sig(x - ei + ej) + sig(x - ei - ej)) / (4 * h * h);
      for (int c = 0; c < N; ++c) d2[c](i, j) = v[c];
    }
  }
  auto gE = S.gamma(s.point(x));
  auto gM = levi_civita(S.base_metric(), x);
  Mat ginv = S.base_metric().at(x).inverse();
  Vec t = Vec::Zero(N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec term(N);
      for (int c = 0; c < N; ++c) term[c] = d2[c](i, j);
      term += gE.contract(d1.col(i), d1.col(j));
      for (int l = 0; l < n; ++l) term -= gM(l, i, j) * d1.col(l);
      t += ginv(i, j) * term;
    }
  return t;
}

}  // namespace

TEST_CASE("pushforward") {
  auto prod = instantiate("product");
  Section c = prod.section("constant");
  Vec x{{0.3, -1.0}};
  for (int i = 0; i < 2; ++i) {
    Vec v = pushforward(c, {x, Vec::Unit(2, i)});
    CHECK(v.head(2) == Vec::Unit(2, i));
    CHECK(v[2] == 0.0);
  }
  auto sp = line_space("0.3*y + 0.1*x");
  Section s = make_section(sp, {"sin(x)"});
  for (const auto& xx : sp->base_chart().samples()) {
    Vec p = s.point(xx);
    Vec vs = sp->projectors(p).v * pushforward(s, {xx, Vec::Unit(1, 0)});
    double lift = 0.3 * std::sin(xx[0]) + 0.1 * xx[0];
    CHECK(std::abs(vs[1] - (std::cos(xx[0]) - lift)) < 1e-12);
    CHECK(vs[0] == 0.0);
  }
  for (auto name : kSpaces) {
    auto e = instantiate(name);
    for (std::size_t k = 0; k < e.sections.size(); ++k) {
      Section sec = e.section(k);
      for (const auto& xx : e.space->base_chart().samples(8)) {
        Vec p = sec.point(xx);
        for (int i = 0; i < e.space->n(); ++i) {
          Tangent X{xx, Vec::Unit(e.space->n(), i)};
          Vec push = pushforward(sec, X);
          CHECK(push.head(e.space->n()) == X.v);
          Vec split = e.space->projectors(p).v * push + e.space->horizontal_lift(X, p);
          CHECK((split - push).norm() < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("second fundamental form") {
  auto prod = instantiate("product");
  CHECK(beta(prod.section("constant"), 0, 1, Vec{{0.2, 0.4}}).norm() == 0.0);
  auto sp = line_space("0");
  Vec b = beta(make_section(sp, {"x^2"}), 0, 0, Vec{{0.7}});
  CHECK(b[0] == 0.0);
  CHECK(b[1] == doctest::Approx(2.0).epsilon(1e-14));
  auto hopf = instantiate("hopf");
  for (std::size_t k = 0; k < hopf.sections.size(); ++k) {
    Section s = hopf.section(k);
    for (const auto& x : hopf.space->base_chart().samples())
      CHECK((beta(s, 0, 1, x) - beta(s, 1, 0, x)).norm() < 1e-10);
  }
}

TEST_CASE("tension of sin on the circle product") {
  auto e = instantiate("product_s1");
  Section s = e.section("sine");
  for (const auto& x : e.space->base_chart().samples()) {
    // Brute-force second difference of sin.
    double h = 1e-4;
    double lap = (std::sin(x[0] + h) - 2 * std::sin(x[0]) + std::sin(x[0] - h)) / (h * h);
    auto t = tension(s, x);
    CHECK(std::abs(t.vertical[1] - lap) < 1e-6);
    CHECK(std::abs(t.vertical[1] + std::sin(x[0])) < 1e-12);
    CHECK(t.horizontal.norm() == 0.0);
    CHECK((tension_v(s, x) - t.vertical).norm() < 1e-12);
  }
  for (auto name : {"product", "product_s1"}) {
    auto p = instantiate(name);
    for (const auto& x : p.space->base_chart().samples(8)) {
      CHECK(tension(p.section("constant"), x).total().norm() == 0.0);
      CHECK(tension(p.section("linear"), x).total().norm() < 1e-14);
    }
  }
}

TEST_CASE("vertical tension is minus the gradient of the vertical energy") {
  // Perturb one grid value of σ = sin and difference the discrete energy.
  auto e = instantiate("product_s1");
  auto grid = sample_section(e.section("sine"), 256);
  const double h = grid.spacing(0);
  for (long k : {5L, 40L, 111L, 200L}) {
    const double d = 1e-6;
    auto up = grid, down = grid;
    up.values[k] += d;
    down.values[k] -= d;
    double grad = (vertical_energy(up) - vertical_energy(down)) / (2 * d) / h;
    Vec x = grid.coordinate(k);
    CHECK(std::abs(-grad - tension_v(e.section("sine"), x)[1]) < 1e-4);
  }
}

TEST_CASE("tension agrees with finite differences and with the metric trace") {
  for (auto name : kSpaces) {
    auto e = instantiate(name);
    for (std::size_t k = 0; k < e.sections.size(); ++k) {
      Section s = e.section(k);
      for (const auto& x : e.space->base_chart().samples(16)) {
        Vec t = tension(s, x).total();
        CHECK_MESSAGE((t - tension_from_beta(s, x)).norm() < 1e-10, name << " " << s.name());
        CHECK_MESSAGE((t - fd_tension(s, x)).norm() < 1e-4 * std::max(1.0, t.norm()), name << " " << s.name());
      }
    }
  }
}

TEST_CASE("vertical tension is vertical and equals v tau on products") {
  for (auto name : kSpaces) {
    auto e = instantiate(name);
    for (std::size_t k = 0; k < e.sections.size(); ++k) {
      Section s = e.section(k);
      for (const auto& x : e.space->base_chart().samples(16)) {
        Vec tv = tension_v(s, x);
        auto P = e.space->projectors(s.point(x));
        CHECK((P.h * tv).norm() < 1e-12);
        if (std::string(name).starts_with("product")) CHECK((tv - tension(s, x).vertical).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("correction tensors") {
  for (auto name : kSpaces) {
    auto e = instantiate(name);
    const int n = e.space->n();
    for (std::size_t k = 0; k < e.sections.size(); ++k) {
      Section s = e.section(k);
      for (const auto& x : e.space->base_chart().samples(8)) {
        auto P = e.space->projectors(s.point(x));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            for (auto c : {CConvention::Pullback, CConvention::BracketPlus, CConvention::BracketMinus})
              CHECK((P.h * tensor_C(s, i, j, x, c)).norm() < 1e-12);
            Vec D = tensor_D(s, i, j, x);
            CHECK((P.v * D).norm() < 1e-12);
            if (std::string(name).starts_with("product")) {
              CHECK(tensor_C(s, i, j, x).norm() == 0.0);
              CHECK(D.norm() == 0.0);
            }
          }
      }
    }
  }
}

TEST_CASE("tangent bundle traces") {
  auto e = instantiate("tangent_bundle_flat");
  for (std::size_t k = 0; k < e.sections.size(); ++k) {
    auto r = decomposition_check(e.section(k));
    CHECK(r.max_tr_D <= 1e-10);
    for (const auto& d : r.points) {
      CHECK((d.tr_C[int(CConvention::BracketPlus)] - d.bracket_trace).norm() < 1e-8);
      CHECK((d.tr_C[int(CConvention::BracketMinus)] + d.bracket_trace).norm() < 1e-8);
      // On the flat torus the bracket trace is the Laplacian of the fibre components.
      CHECK((d.bracket_trace - d.tau.vertical).norm() < 1e-8);
    }
  }
  auto lin = decomposition_check(e.section("linear"));
  CHECK(lin.max_residual_h == 0.0);
}

TEST_CASE("hopf trace of D is twice the A trace") {
  auto e = instantiate("hopf");
  const auto& S = *e.space;
  for (std::size_t k = 0; k < e.sections.size(); ++k) {
    Section s = e.section(k);
    for (const auto& x : S.base_chart().samples(16)) {
      auto j = s.jet(x);
      Mat frame = orthonormal_frame_matrix(S.base_metric().at(x));
      Vec expect = Vec::Zero(3);
      for (int a = 0; a < 2; ++a) {
        Vec ea = frame.col(a);
        // vσ*e_a extended as W = σ*e_a − H(e_a).
        LocalField H = S.horizontal_field(j.p, ea);
        LocalField Sf{Vec(3), Mat::Zero(3, 3)};
        Sf.value << ea, j.d1 * ea;
        Sf.jacobian.row(2).head(2) = (j.d2[0] * ea).transpose();
        LocalField W{Sf.value - H.value, Sf.jacobian - H.jacobian};
        expect += 2 * S.oneill_A(j.p, H, W);
      }
      auto d = diagnose(s, x);
      CHECK((d.tr_D - expect).norm() < 1e-8);
    }
  }
}

TEST_CASE("decomposition identities on the gallery") {
  for (auto name : kSpaces) {
    auto e = instantiate(name);
    for (std::size_t k = 0; k < e.sections.size(); ++k) {
      auto r = decomposition_check(e.section(k));
      CHECK(r.points.size() == 64);
      CHECK_MESSAGE(r.max_residual_v[0] <= 1e-8, name << " " << e.sections[k].name);
      CHECK_MESSAGE(r.max_residual_h <= 1e-8, name << " " << e.sections[k].name);
      CHECK(r.convention == CConvention::Pullback);
      CHECK(r.literal_sign != -1);
      CHECK(r.max_tau_v_off_vertical < 1e-12);
    }
  }
  auto hopf = instantiate("hopf");
  auto r = decomposition_check(hopf.section("cos_theta"));
  int passing = 0;
  for (double m : r.max_residual_v) passing += m < 1e-8;
  CHECK(passing == 1);
  CHECK(r.literal_sign == 1);
}

TEST_CASE("classification") {
  auto prod = instantiate("product");
  auto c = classify(prod.section("constant"));
  CHECK(c.harmonic_map);
  CHECK(c.harmonic_section);
  for (auto s : c.items) CHECK(s != ItemStatus::Violated);

  auto s1 = classify(instantiate("product_s1").section("sine"));
  CHECK_FALSE(s1.harmonic_map);
  CHECK_FALSE(s1.harmonic_section);
  CHECK(s1.max_tr_C[0] == 0.0);
  CHECK(s1.max_tr_D == 0.0);
  CHECK(s1.items[0] == ItemStatus::Holds);

  auto h = classify(instantiate("hopf").section("zero"));
  CHECK(h.max_tr_D > 1.0);
  CHECK_FALSE(h.harmonic_map);
  CHECK(h.items[2] == ItemStatus::Holds);
  CHECK(h.harmonic_section);

  for (auto name : kSpaces) {
    auto e = instantiate(name);
    for (std::size_t k = 0; k < e.sections.size(); ++k) {
      auto r = classify(e.section(k));
      CHECK_FALSE(r.any_violation());
      CHECK(r.corollary_consistent);
      if (r.harmonic_map) CHECK(r.harmonic_section);
      if (std::string(name) == "product" || std::string(name) == "blumenthal_flat")
        CHECK(r.harmonic_map == r.harmonic_section);
    }
  }
}

TEST_CASE("section reports are independent of the worker count") {
  auto e = instantiate("hopf");
  SectionOptions a, b;
  a.workers = 1;
  b.workers = 3;
  auto ra = classify(e.section("mixed"), a), rb = classify(e.section("mixed"), b);
  CHECK(ra.max_tau == rb.max_tau);
  CHECK(ra.max_residual_v[0] == rb.max_residual_v[0]);
  for (std::size_t k = 0; k < ra.points.size(); ++k) CHECK(ra.points[k].tau_v == rb.points[k].tau_v);
}

TEST_CASE("section validation") {
  auto e = instantiate("product");
  CHECK_THROWS_AS(make_section(e.space, {"y"}), Error);
  CHECK_THROWS_AS(make_section(e.space, {"1", "2"}), Error);
}

TEST_CASE("flow fixed point and stability guard") {
  auto e = instantiate("product_s1");
  FlowOptions opt;
  opt.steps = 50;
  auto r = tension_flow(e.section("zero"), opt);
  CHECK(r.final_energy == 0.0);
  CHECK(r.final_max_tau_v == 0.0);
  opt.dt = 10;
  try {
    tension_flow(e.section("sine"), opt);
    FAIL("expected StepUnstable");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::StepUnstable);
  }
  CHECK_THROWS_AS(tension_flow(instantiate("hopf").section("zero"), FlowOptions{}), Error);
  CHECK_THROWS_AS(tension_flow(instantiate("blumenthal_flat").section("zero"), FlowOptions{}), Error);
}

TEST_CASE("flow decays the first mode like the heat equation") {
  auto e = instantiate("product_s1");
  FlowOptions opt;
  opt.steps = 2000;
  opt.record_every = 100;
  auto r = tension_flow(e.section("sine"), opt);
  CHECK(r.monotone);
  for (std::size_t k = 1; k < r.trace.energy.size(); ++k) CHECK(r.trace.energy[k] <= r.trace.energy[k - 1]);
  double a0 = r.trace.mode1[0];
  CHECK(a0 == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < r.trace.time.size(); ++k)
    CHECK(std::abs(r.trace.mode1[k] / (a0 * std::exp(-r.trace.time[k])) - 1) < 0.02);
}

TEST_CASE("two-mode data decays mode 2 four times faster") {
  auto e = instantiate("product_s1");
  FlowOptions opt;
  opt.steps = 1000;
  opt.record_every = 250;
  auto r = tension_flow(e.section("two_mode"), opt);
  for (std::size_t k = 1; k < r.trace.time.size(); ++k) {
    double t = r.trace.time[k];
    double rate1 = -std::log(r.trace.mode1[k] / r.trace.mode1[0]) / t;
    double rate2 = -std::log(r.trace.mode2[k] / r.trace.mode2[0]) / t;
    CHECK(rate1 == doctest::Approx(1.0).epsilon(0.01));
    CHECK(rate2 == doctest::Approx(4.0).epsilon(0.01));
  }
}
