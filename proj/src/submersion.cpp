#include "harmsec/submersion.hpp"

#include <cmath>
#include <functional>

#include "harmsec/error.hpp"
#include "harmsec/parallel.hpp"

namespace harmsec {

namespace {

std::span<const double> span_of(const Vec& p) { return {p.data(), static_cast<std::size_t>(p.size())}; }

Mat fiber_solve(const Mat& gff, const Mat& rhs) {
  Eigen::LLT<Mat> llt(gff);
  if (llt.info() != Eigen::Success || !gff.allFinite())
    throw Error(ErrorCode::SingularFiberBlock, "fibre block of the total metric is not invertible");
  return llt.solve(rhs);
}

}  // namespace

Mat horizontal_from_metric(const Metric& total, int n, const Vec& p) {
  Mat g = total.at(p);
  const int r = total.dim() - n;
  return -fiber_solve(g.bottomRightCorner(r, r), g.bottomLeftCorner(r, n));
}

SubmersionSpace::SubmersionSpace(Metric base, Chart total, std::vector<std::vector<Expr>> lift, Connection connection)
    : base_(std::move(base)), total_(std::move(total)), lift_exprs_(std::move(lift)), conn_(std::move(connection)) {
  const int rr = total_.dim() - base_.dim();
  if (rr < 1) throw Error(ErrorCode::InvalidGeometry, "total chart must have at least one fibre coordinate");
  if (static_cast<int>(lift_exprs_.size()) != rr)
    throw Error(ErrorCode::InvalidGeometry, "lift must have one row per fibre coordinate");
  for (const auto& row : lift_exprs_) {
    if (static_cast<int>(row.size()) != base_.dim())
      throw Error(ErrorCode::InvalidGeometry, "lift rows must have one entry per base coordinate");
    std::vector<Program> progs;
    for (const auto& e : row) progs.emplace_back(e, total_.names());
    lift_progs_.push_back(std::move(progs));
  }
  validate();
}

SubmersionSpace::SubmersionSpace(Metric base, Metric total_metric, Connection connection)
    : lift_kind_(LiftKind::FromMetric), base_(std::move(base)), total_(total_metric.chart()),
      total_metric_(std::move(total_metric)), conn_(std::move(connection)) {
  if (total_.dim() <= base_.dim())
    throw Error(ErrorCode::InvalidGeometry, "total chart must have at least one fibre coordinate");
  validate();
  for (const auto& p : total_.samples()) lift(p);
}

SubmersionSpace SubmersionSpace::tangent_bundle(Metric base, const Chart& fiber) {
  if (fiber.dim() != base.dim())
    throw Error(ErrorCode::InvalidGeometry, "tangent-bundle fibre must have the base dimension");
  SubmersionSpace s;
  s.lift_kind_ = LiftKind::TangentBundle;
  s.total_ = base.chart().extended(fiber);
  s.conn_ = Connection::horizontal_lift(base, s.total_);
  s.base_ = std::move(base);
  s.validate();
  return s;
}

void SubmersionSpace::validate() const {
  for (int i = 0; i < n(); ++i)
    if (total_.names()[i] != base_.chart().names()[i])
      throw Error(ErrorCode::InvalidGeometry, "total chart must start with the base coordinates");
  if (conn_.chart().names() != total_.names())
    throw Error(ErrorCode::InvalidGeometry, "connection is not defined on the total chart");
}

SubmersionSpace SubmersionSpace::with_connection(Connection c) const {
  SubmersionSpace s = *this;
  s.conn_ = std::move(c);
  s.validate();
  return s;
}

Mat SubmersionSpace::lift(const Vec& p) const {
  if (lift_kind_ == LiftKind::FromMetric) return horizontal_from_metric(*total_metric_, n(), p);
  if (lift_kind_ == LiftKind::TangentBundle) {
    std::vector<Mat> dh;
    return lift(p, dh);
  }
  Mat h(r(), n());
  for (int a = 0; a < r(); ++a)
    for (int i = 0; i < n(); ++i) h(a, i) = lift_progs_[a][i].run(span_of(p));
  return h;
}

Mat SubmersionSpace::lift(const Vec& p, std::vector<Mat>& dh) const {
  const int N = dim(), nn = n(), rr = r();
  dh.assign(N, Mat::Zero(rr, nn));
  if (lift_kind_ == LiftKind::TangentBundle) {
    Vec x = p.head(nn), y = p.tail(rr);
    std::vector<Christoffel> dG;
    Christoffel G = levi_civita(base_, x, dG);
    Mat h = Mat::Zero(rr, nn);
    for (int k = 0; k < nn; ++k)
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j) {
          h(k, i) -= y[j] * G(k, i, j);
          dh[nn + j](k, i) = -G(k, i, j);
          for (int a = 0; a < nn; ++a) dh[a](k, i) -= y[j] * dG[a](k, i, j);
        }
    return h;
  }
  if (lift_kind_ == LiftKind::FromMetric) {
    std::vector<Mat> dg;
    Mat g = total_metric_->at(p, dg);
    Mat gff = g.bottomRightCorner(rr, rr);
    Mat h = -fiber_solve(gff, g.bottomLeftCorner(rr, nn));
    Eigen::LLT<Mat> llt(gff);
    for (int a = 0; a < N; ++a)
      dh[a] = -llt.solve(Mat(dg[a].bottomLeftCorner(rr, nn) + dg[a].bottomRightCorner(rr, rr) * h));
    return h;
  }
  Mat h(rr, nn);
  Vec grad(N);
  for (int al = 0; al < rr; ++al)
    for (int i = 0; i < nn; ++i) {
      h(al, i) = lift_progs_[al][i].gradient(span_of(p), grad);
      for (int a = 0; a < N; ++a) dh[a](al, i) = grad[a];
    }
  return h;
}

namespace {

ProjectorPair projector_pair(const Mat& h) {
  const int rr = static_cast<int>(h.rows()), nn = static_cast<int>(h.cols()), N = nn + rr;
  Mat ph = Mat::Zero(N, N);
  ph.topLeftCorner(nn, nn).setIdentity();
  ph.bottomLeftCorner(rr, nn) = h;
  return {Mat::Identity(N, N) - ph, ph};
}

}  // namespace

ProjectorPair SubmersionSpace::projectors(const Vec& p) const { return projector_pair(lift(p)); }

LocalSplitting SubmersionSpace::splitting(const Vec& p) const {
  LocalSplitting s;
  s.p = p;
  s.h = lift(p, s.dh);
  s.P = projector_pair(s.h);
  s.G = gamma(p);
  return s;
}

LocalField SubmersionSpace::horizontal_part(const LocalSplitting& s, const LocalField& u) const {
  const int N = dim(), nn = n(), rr = r();
  LocalField out{Vec::Zero(N), Mat::Zero(N, N)};
  out.value.head(nn) = u.value.head(nn);
  out.value.tail(rr) = s.h * u.value.head(nn);
  out.jacobian.topRows(nn) = u.jacobian.topRows(nn);
  out.jacobian.bottomRows(rr) = s.h * u.jacobian.topRows(nn);
  for (int a = 0; a < N; ++a) out.jacobian.col(a).tail(rr) += s.dh[a] * u.value.head(nn);
  return out;
}

LocalField SubmersionSpace::vertical_part(const LocalSplitting& s, const LocalField& u) const {
  LocalField hu = horizontal_part(s, u);
  return {u.value - hu.value, u.jacobian - hu.jacobian};
}

LocalField SubmersionSpace::horizontal_field(const LocalSplitting& s, const Vec& x) const {
  LocalField c{Vec::Zero(dim()), Mat::Zero(dim(), dim())};
  c.value.head(n()) = x;
  return horizontal_part(s, c);
}

Vec SubmersionSpace::oneill_T(const LocalSplitting& s, const LocalField& u, const LocalField& v) const {
  Vec vu = s.P.v * u.value;
  return s.P.h * covariant(s.G, vu, vertical_part(s, v)) + s.P.v * covariant(s.G, vu, horizontal_part(s, v));
}

Vec SubmersionSpace::oneill_A(const LocalSplitting& s, const LocalField& u, const LocalField& v) const {
  Vec hu = s.P.h * u.value;
  return s.P.v * covariant(s.G, hu, horizontal_part(s, v)) + s.P.h * covariant(s.G, hu, vertical_part(s, v));
}

LocalField SubmersionSpace::horizontal_part(const Vec& p, const LocalField& u) const {
  LocalSplitting s;
  s.h = lift(p, s.dh);
  return horizontal_part(s, u);
}

LocalField SubmersionSpace::vertical_part(const Vec& p, const LocalField& u) const {
  LocalField hu = horizontal_part(p, u);
  return {u.value - hu.value, u.jacobian - hu.jacobian};
}

Vec SubmersionSpace::horizontal_lift(const Tangent& x, const Vec& p) const {
  if (x.base.size() != n() || p.size() != dim() || (x.base - p.head(n())).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::BasePointMismatch, "base point of the tangent is not the projection of p");
  if (x.v.size() != n()) throw Error(ErrorCode::InvalidArgument, "tangent has the wrong number of components");
  Vec out(dim());
  out.head(n()) = x.v;
  out.tail(r()) = lift(p) * x.v;
  return out;
}

LocalField SubmersionSpace::horizontal_field(const Vec& p, const Vec& x) const {
  LocalField c{Vec::Zero(dim()), Mat::Zero(dim(), dim())};
  c.value.head(n()) = x;
  return horizontal_part(p, c);
}

Vec SubmersionSpace::oneill_T(const Vec& p, const Christoffel& g, const LocalField& u, const LocalField& v) const {
  LocalSplitting s;
  s.h = lift(p, s.dh);
  s.P = projector_pair(s.h);
  s.G = g;
  return oneill_T(s, u, v);
}

Vec SubmersionSpace::oneill_A(const Vec& p, const Christoffel& g, const LocalField& u, const LocalField& v) const {
  LocalSplitting s;
  s.h = lift(p, s.dh);
  s.P = projector_pair(s.h);
  s.G = g;
  return oneill_A(s, u, v);
}

Vec SubmersionSpace::oneill_T(const Vec& p, const LocalField& u, const LocalField& v) const {
  return oneill_T(p, gamma(p), u, v);
}

Vec SubmersionSpace::oneill_A(const Vec& p, const LocalField& u, const LocalField& v) const {
  return oneill_A(p, gamma(p), u, v);
}

// ---------------------------------------------------------------- checks

const Residual& VerificationReport::operator[](std::string_view name) const {
  for (const auto& r : residuals)
    if (r.name == name) return r;
  throw Error(ErrorCode::InvalidArgument, "no residual named '" + std::string(name) + "'");
}

namespace {

struct Worst {
  double value = 0.0;
  std::string label;
  void offer(double v, const std::string& l) {
    if (!(v <= value)) {  // NaN propagates as the worst value
      value = v;
      label = l;
    }
  }
};

using SampleFn = std::function<std::vector<Worst>(const Vec&)>;

VerificationReport run_check(std::string name, std::vector<std::string> parts, const SubmersionSpace& s,
                             const CheckOptions& opt, const SampleFn& fn) {
  auto pts = s.total_chart().samples(opt.samples, 0.05, opt.pinned);
  std::vector<std::vector<Worst>> per(pts.size());
  parallel_for(pts.size(), opt.workers, [&](std::size_t k) { per[k] = fn(pts[k]); });
  VerificationReport rep{std::move(name), {}};
  for (std::size_t j = 0; j < parts.size(); ++j) {
    Residual r;
    r.name = parts[j];
    r.tolerance = opt.tolerance;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Worst& w = per[k][j];
      if (k == 0 || !(w.value <= r.max)) {
        r.max = w.value;
        r.worst_point = pts[k];
        r.worst_label = w.label;
      }
      r.min = std::min(r.min, w.value);
    }
    r.pass = r.max <= r.tolerance;
    rep.residuals.push_back(std::move(r));
  }
  return rep;
}

std::string pair_label(const Chart& c, int i, int j) { return "(" + c.names()[i] + "," + c.names()[j] + ")"; }

}  // namespace

VerificationReport check_affine(const SubmersionSpace& s, const CheckOptions& opt) {
  return run_check("affine", {"affine"}, s, opt, [&](const Vec& p) {
    const int n = s.n();
    auto G = s.gamma(p);
    auto GM = levi_civita(s.base_metric(), p.head(n));
    auto P = s.projectors(p);
    Worst w;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        LocalField Hi = s.horizontal_field(p, Vec::Unit(n, i));
        LocalField Hj = s.horizontal_field(p, Vec::Unit(n, j));
        Vec lhs = P.h * covariant(G, Hi.value, Hj);
        Vec rhs = s.horizontal_lift({p.head(n), GM.contract(Vec::Unit(n, i), Vec::Unit(n, j))}, p);
        w.offer((lhs - rhs).norm(), pair_label(s.total_chart(), i, j));
      }
    return std::vector<Worst>{w};
  });
}

VerificationReport check_skew(const SubmersionSpace& s, const CheckOptions& opt) {
  return run_check("skew", {"skew"}, s, opt, [&](const Vec& p) {
    const int n = s.n();
    auto G = s.gamma(p);
    Worst w;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        LocalField Hi = s.horizontal_field(p, Vec::Unit(n, i));
        LocalField Hj = s.horizontal_field(p, Vec::Unit(n, j));
        Vec sym = s.oneill_A(p, G, Hi, Hj) + s.oneill_A(p, G, Hj, Hi);
        w.offer(sym.norm(), pair_label(s.total_chart(), i, j));
      }
    return std::vector<Worst>{w};
  });
}

VerificationReport check_blumenthal(const SubmersionSpace& s, const CheckOptions& opt) {
  return run_check("blumenthal", {"T_V_W", "A_Y_W", "h_nabla_V_HX"}, s, opt, [&](const Vec& p) {
    const int n = s.n(), r = s.r(), N = s.dim();
    auto G = s.gamma(p);
    auto P = s.projectors(p);
    Worst tvw, ayw, hvh;
    const auto& c = s.total_chart();
    for (int a = 0; a < r; ++a) {
      LocalField Va = LocalField::constant(Vec::Unit(N, n + a));
      for (int b = 0; b < r; ++b) {
        LocalField Vb = LocalField::constant(Vec::Unit(N, n + b));
        tvw.offer(s.oneill_T(p, G, Va, Vb).norm(), pair_label(c, n + a, n + b));
      }
      for (int i = 0; i < n; ++i) {
        LocalField Hi = s.horizontal_field(p, Vec::Unit(n, i));
        ayw.offer(s.oneill_A(p, G, Hi, Va).norm(), pair_label(c, i, n + a));
        hvh.offer((P.h * covariant(G, Va.value, Hi)).norm(), pair_label(c, n + a, i));
      }
    }
    return std::vector<Worst>{tvw, ayw, hvh};
  });
}

VerificationReport check_horizontal_integrability(const SubmersionSpace& s, const CheckOptions& opt) {
  return run_check("horizontal_integrability", {"v_bracket"}, s, opt, [&](const Vec& p) {
    const int n = s.n();
    auto P = s.projectors(p);
    Worst w;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Vec b = bracket(s.horizontal_field(p, Vec::Unit(n, i)), s.horizontal_field(p, Vec::Unit(n, j)));
        w.offer((P.v * b).norm(), pair_label(s.total_chart(), i, j));
      }
    return std::vector<Worst>{w};
  });
}

VerificationReport check_projectors(const SubmersionSpace& s, const CheckOptions& opt) {
  CheckOptions o = opt;
  if (o.tolerance > 1e-12) o.tolerance = std::min(o.tolerance, 1e-12);
  return run_check("projectors", {"sum", "v_idempotent", "h_idempotent", "vh", "hv", "pi_v", "rank"}, s, o,
                   [&](const Vec& p) {
                     const int n = s.n(), N = s.dim();
                     auto P = s.projectors(p);
                     auto mx = [](const Mat& m) { return m.cwiseAbs().maxCoeff(); };
                     std::vector<Worst> w(7);
                     w[0].offer(mx(P.v + P.h - Mat::Identity(N, N)), "");
                     w[1].offer(mx(P.v * P.v - P.v), "");
                     w[2].offer(mx(P.h * P.h - P.h), "");
                     w[3].offer(mx(P.v * P.h), "");
                     w[4].offer(mx(P.h * P.v), "");
                     w[5].offer(mx(P.v.topRows(n)), "");
                     Eigen::JacobiSVD<Mat> svd(P.v);
                     svd.setThreshold(1e-9);
                     w[6].offer(std::abs(static_cast<double>(svd.rank()) - s.r()), "");
                     return w;
                   });
}

}  // namespace harmsec
