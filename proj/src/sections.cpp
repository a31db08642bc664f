#include "harmsec/sections.hpp"

#include <algorithm>

#include "harmsec/error.hpp"
#include "harmsec/parallel.hpp"

namespace harmsec {

namespace {

std::span<const double> span_of(const Vec& p) { return {p.data(), static_cast<std::size_t>(p.size())}; }

// Per-point evaluation state. Base vectors are extended with constant
// coefficients; S_X is the σ-related extension of σ*X, H(X) the global
// horizontal lift and W_X = S_X − H(X) the vertical part of σ*X.
struct Ctx {
  const SubmersionSpace& sp;
  Section::Jet j;
  LocalSplitting L;
  Christoffel GM;

  // H, S and W on the coordinate vectors; all three are linear in X.
  std::vector<LocalField> Hc, Sc, Wc;

  Ctx(const Section& s, const Vec& x)
      : sp(s.space()), j(s.jet(x)), L(sp.splitting(j.p)), GM(levi_civita(sp.base_metric(), x)) {
    for (int i = 0; i < n(); ++i) {
      Vec e = Vec::Unit(n(), i);
      LocalField f{push(e), Mat::Zero(N(), N())};
      for (int a = 0; a < sp.r(); ++a) f.jacobian.row(n() + a).head(n()) = j.d2[a].row(i);
      Hc.push_back(sp.horizontal_field(L, e));
      Wc.push_back({f.value - Hc.back().value, f.jacobian - Hc.back().jacobian});
      Sc.push_back(std::move(f));
    }
  }

  int n() const { return sp.n(); }
  int N() const { return sp.dim(); }

  Vec push(const Vec& X) const {
    Vec out(N());
    out.head(n()) = X;
    out.tail(sp.r()) = j.d1 * X;
    return out;
  }
  static LocalField combine(const std::vector<LocalField>& basis, const Vec& X) {
    LocalField out{X[0] * basis[0].value, X[0] * basis[0].jacobian};
    for (std::size_t i = 1; i < basis.size(); ++i) {
      out.value += X[i] * basis[i].value;
      out.jacobian += X[i] * basis[i].jacobian;
    }
    return out;
  }
  LocalField S(const Vec& X) const { return combine(Sc, X); }
  LocalField H(const Vec& X) const { return combine(Hc, X); }
  LocalField W(const Vec& X) const { return combine(Wc, X); }
  Vec sigma_nabla(const Vec& X, const Vec& Y) const { return push(GM.contract(X, Y)); }

  Vec beta(const Vec& X, const Vec& Y) const { return covariant(L.G, push(X), S(Y)) - sigma_nabla(X, Y); }
  Vec beta_v(const Vec& X, const Vec& Y) const {
    return L.P.v * (covariant(L.G, push(X), W(Y)) - sigma_nabla(X, Y));
  }
  Vec beta_v_literal(const Vec& X, const Vec& Y) const {
    return L.P.v * (covariant(L.G, W(X).value, W(Y)) - sigma_nabla(X, Y));
  }
  Vec C(const Vec& X, const Vec& Y, CConvention c) const {
    Vec t = sp.oneill_T(L, W(X), H(Y));
    Vec a = sp.oneill_A(L, H(X), H(Y));
    if (c == CConvention::Pullback) return t + a;
    Vec br = L.P.v * bracket(H(X), W(Y));
    return 2 * t + a + (c == CConvention::BracketPlus ? br : Vec(-br));
  }
  Vec D(const Vec& X, const Vec& Y) const {
    return sp.oneill_T(L, W(X), W(Y)) + 2 * sp.oneill_A(L, H(X), W(Y));
  }
  Mat frame() const { return orthonormal_frame_matrix(sp.base_metric().at(j.x)); }
};

Vec unit(int n, int i) {
  if (i < 0 || i >= n) throw Error(ErrorCode::InvalidArgument, "base index out of range");
  return Vec::Unit(n, i);
}

}  // namespace

Section::Section(std::shared_ptr<const SubmersionSpace> space, std::vector<Expr> fiber, std::string name)
    : space_(std::move(space)), exprs_(std::move(fiber)), name_(std::move(name)) {
  if (!space_) throw Error(ErrorCode::InvalidArgument, "section needs a space");
  if (static_cast<int>(exprs_.size()) != space_->r())
    throw Error(ErrorCode::InvalidGeometry, "section has " + std::to_string(exprs_.size()) +
                                                " components, the fibre has dimension " + std::to_string(space_->r()));
  for (const auto& e : exprs_) progs_.emplace_back(e, space_->base_chart().names());
}

Section::Jet Section::jet(const Vec& x) const {
  const int n = space_->n(), r = space_->r();
  if (x.size() != n) throw Error(ErrorCode::InvalidArgument, "base point has the wrong dimension");
  Jet j{x, Vec(n + r), Mat(r, n), std::vector<Mat>(r, Mat(n, n))};
  j.p.head(n) = x;
  Vec grad(n);
  for (int a = 0; a < r; ++a) {
    j.p[n + a] = progs_[a].hessian(span_of(x), grad, j.d2[a]);
    j.d1.row(a) = grad.transpose();
  }
  return j;
}

Vec Section::point(const Vec& x) const {
  const int n = space_->n(), r = space_->r();
  if (x.size() != n) throw Error(ErrorCode::InvalidArgument, "base point has the wrong dimension");
  Vec p(n + r);
  p.head(n) = x;
  for (int a = 0; a < r; ++a) p[n + a] = progs_[a].run(span_of(x));
  return p;
}

const char* convention_name(CConvention c) {
  switch (c) {
    case CConvention::Pullback: return "pullback";
    case CConvention::BracketPlus: return "bracket+";
    case CConvention::BracketMinus: return "bracket-";
  }
  return "?";
}

const char* item_status_name(ItemStatus s) {
  switch (s) {
    case ItemStatus::Vacuous: return "vacuous";
    case ItemStatus::Holds: return "holds";
    case ItemStatus::Violated: return "VIOLATED";
  }
  return "?";
}

Vec pushforward(const Section& s, const Tangent& x) {
  if (x.v.size() != s.space().n()) throw Error(ErrorCode::InvalidArgument, "tangent has the wrong dimension");
  auto j = s.jet(x.base);
  Vec out(s.space().dim());
  out.head(s.space().n()) = x.v;
  out.tail(s.space().r()) = j.d1 * x.v;
  return out;
}

Vec beta(const Section& s, int i, int j, const Vec& x) {
  Ctx c(s, x);
  return c.beta(unit(c.n(), i), unit(c.n(), j));
}

SplitTangent tension(const Section& s, const Vec& x) {
  Ctx c(s, x);
  Mat e = c.frame();
  Vec t = Vec::Zero(c.N());
  for (int a = 0; a < c.n(); ++a) t += c.beta(e.col(a), e.col(a));
  return {c.L.P.v * t, c.L.P.h * t};
}

Vec tension_from_beta(const Section& s, const Vec& x) {
  Ctx c(s, x);
  Mat ginv = s.space().base_metric().at(x).inverse();
  Vec t = Vec::Zero(c.N());
  for (int i = 0; i < c.n(); ++i)
    for (int j = 0; j < c.n(); ++j) t += ginv(i, j) * c.beta(Vec::Unit(c.n(), i), Vec::Unit(c.n(), j));
  return t;
}

Vec tension_v(const Section& s, const Vec& x) {
  Ctx c(s, x);
  Mat e = c.frame();
  Vec t = Vec::Zero(c.N());
  for (int a = 0; a < c.n(); ++a) t += c.beta_v(e.col(a), e.col(a));
  return t;
}

Vec tension_v_literal(const Section& s, const Vec& x) {
  Ctx c(s, x);
  Mat e = c.frame();
  Vec t = Vec::Zero(c.N());
  for (int a = 0; a < c.n(); ++a) t += c.beta_v_literal(e.col(a), e.col(a));
  return t;
}

Vec tensor_C(const Section& s, int i, int j, const Vec& x, CConvention conv) {
  Ctx c(s, x);
  return c.C(unit(c.n(), i), unit(c.n(), j), conv);
}

Vec tensor_D(const Section& s, int i, int j, const Vec& x) {
  Ctx c(s, x);
  return c.D(unit(c.n(), i), unit(c.n(), j));
}

PointDiagnostics diagnose(const Section& s, const Vec& x) {
  Ctx c(s, x);
  Mat e = c.frame();
  const int N = c.N();
  PointDiagnostics d;
  d.x = x;
  d.p = c.j.p;
  Vec tau = Vec::Zero(N);
  d.tau_v = Vec::Zero(N);
  d.tau_v_literal = Vec::Zero(N);
  d.tr_D = Vec::Zero(N);
  d.bracket_trace = Vec::Zero(N);
  for (auto& v : d.tr_C) v = Vec::Zero(N);
  for (int a = 0; a < c.n(); ++a) {
    Vec ea = e.col(a);
    tau += c.beta(ea, ea);
    d.tau_v += c.beta_v(ea, ea);
    d.tau_v_literal += c.beta_v_literal(ea, ea);
    for (int k = 0; k < 3; ++k) d.tr_C[k] += c.C(ea, ea, static_cast<CConvention>(k));
    d.tr_D += c.D(ea, ea);
    d.bracket_trace += c.L.P.v * bracket(c.H(ea), c.W(ea));
  }
  d.tau = {c.L.P.v * tau, c.L.P.h * tau};
  for (int k = 0; k < 3; ++k) d.residual_v[k] = (d.tau.vertical - d.tau_v - d.tr_C[k]).norm();
  d.residual_literal[0] = (d.tau.vertical - d.tau_v_literal - d.tr_C[1]).norm();
  d.residual_literal[1] = (d.tau.vertical - d.tau_v_literal - d.tr_C[2]).norm();
  d.residual_h = (d.tau.horizontal - d.tr_D).norm();
  return d;
}

FormTable second_fundamental_forms(const Section& s, const Vec& x) {
  Ctx c(s, x);
  const int n = c.n(), N = c.N();
  FormTable t;
  t.n = n;
  Mat ginv = s.space().base_metric().at(x).inverse();
  t.tau = t.tau_v = t.tau_v_literal = t.tr_C = Vec::Zero(N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec ei = Vec::Unit(n, i), ej = Vec::Unit(n, j);
      t.beta.push_back(c.beta(ei, ej));
      t.beta_v.push_back(c.beta_v(ei, ej));
      t.beta_v_literal.push_back(c.beta_v_literal(ei, ej));
      // Σ_a B(e_a, e_a) = g^{ij} B_ij for any bilinear B
      t.tau += ginv(i, j) * t.beta.back();
      t.tau_v += ginv(i, j) * t.beta_v.back();
      t.tau_v_literal += ginv(i, j) * t.beta_v_literal.back();
    }
  Mat e = c.frame();
  for (int a = 0; a < n; ++a) {
    Vec ea = e.col(a);
    t.tr_C += c.C(ea, ea, CConvention::Pullback);
  }
  return t;
}

bool SectionReport::any_violation() const {
  for (auto s : items)
    if (s == ItemStatus::Violated) return true;
  return !corollary_consistent;
}

SectionReport decomposition_check(const Section& s, const SectionOptions& opt) {
  auto xs = s.space().base_chart().samples(opt.samples, 0.05, opt.pinned);
  SectionReport rep;
  rep.tolerance = opt.tolerance;
  rep.points.resize(xs.size());
  parallel_for(xs.size(), opt.workers, [&](std::size_t k) { rep.points[k] = diagnose(s, xs[k]); });
  auto upd = [](double& m, double v) { m = (v > m || v != v) ? v : m; };
  for (const auto& d : rep.points) {
    upd(rep.max_tau, d.tau.total().norm());
    upd(rep.max_tau_h, d.tau.horizontal.norm());
    upd(rep.max_tau_v, d.tau_v.norm());
    upd(rep.max_tau_v_literal, d.tau_v_literal.norm());
    for (int k = 0; k < 3; ++k) {
      upd(rep.max_tr_C[k], d.tr_C[k].norm());
      upd(rep.max_residual_v[k], d.residual_v[k]);
    }
    for (int k = 0; k < 2; ++k) upd(rep.max_residual_literal[k], d.residual_literal[k]);
    upd(rep.max_tr_D, d.tr_D.norm());
    upd(rep.max_bracket_trace, d.bracket_trace.norm());
    upd(rep.max_residual_h, d.residual_h);
    auto P = s.space().projectors(d.p);
    upd(rep.max_tau_v_off_vertical, (P.h * d.tau_v).norm());
  }
  const double tol = opt.tolerance;
  for (int k = 0; k < 3; ++k)
    if (rep.max_residual_v[k] <= tol) {
      rep.convention = static_cast<CConvention>(k);
      break;
    }
  if (rep.max_residual_literal[0] <= tol)
    rep.literal_sign = 1;
  else if (rep.max_residual_literal[1] <= tol)
    rep.literal_sign = -1;
  rep.horizontal_ok = rep.max_residual_h <= tol;
  return rep;
}

SectionReport classify(const Section& s, const SectionOptions& opt) {
  SectionReport rep = decomposition_check(s, opt);
  const double tol = opt.tolerance;
  rep.harmonic_map = rep.max_tau <= tol;
  rep.harmonic_section = rep.max_tau_v <= tol;
  int ci = static_cast<int>(rep.convention.value_or(CConvention::Pullback));
  bool c0 = rep.max_tr_C[ci] <= tol, d0 = rep.max_tr_D <= tol;
  bool map = rep.harmonic_map, sec = rep.harmonic_section;
  auto row = [](bool premise, bool conclusion) {
    return !premise ? ItemStatus::Vacuous : (conclusion ? ItemStatus::Holds : ItemStatus::Violated);
  };
  rep.items[0] = row(d0, map == sec);
  rep.items[1] = row(map, c0 && d0);
  rep.items[2] = row(!c0 || !d0, !map);
  rep.items[3] = row(sec, c0);
  rep.items[4] = row(!c0, !sec);
  rep.corollary_consistent = !map || rep.max_tau_v <= 10 * tol;
  return rep;
}

}  // namespace harmsec
