#include "harmsec/geometry.hpp"

#include <cmath>
#include <set>

#include "harmsec/error.hpp"

namespace harmsec {

namespace {

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

std::span<const double> span_of(const Vec& p) { return {p.data(), static_cast<std::size_t>(p.size())}; }

void require_dim(const Chart& chart, const Vec& p) {
  if (p.size() != chart.dim())
    throw Error(ErrorCode::InvalidArgument, "point has " + std::to_string(p.size()) +
                                                " coordinates, chart has " + std::to_string(chart.dim()));
}

}  // namespace

// ---------------------------------------------------------------- Chart

Chart::Chart(std::vector<std::string> names, std::vector<Interval> domain)
    : names_(std::move(names)), domain_(std::move(domain)) {
  if (names_.empty()) throw Error(ErrorCode::InvalidGeometry, "chart has no coordinates");
  if (names_.size() > static_cast<std::size_t>(kMaxSeeds))
    throw Error(ErrorCode::InvalidGeometry, "chart dimension exceeds " + std::to_string(kMaxSeeds));
  if (domain_.size() != names_.size())
    throw Error(ErrorCode::InvalidGeometry, "chart domain and coordinate list differ in length");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty() || n == "pi") throw Error(ErrorCode::InvalidGeometry, "invalid coordinate name '" + n + "'");
    if (!seen.insert(n).second) throw Error(ErrorCode::InvalidGeometry, "duplicate coordinate name '" + n + "'");
  }
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    const auto& iv = domain_[i];
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw Error(ErrorCode::InvalidGeometry, "empty domain interval for '" + names_[i] + "'");
  }
}

std::optional<int> Chart::index_of(std::string_view name) const {
  for (int i = 0; i < dim(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

bool Chart::contains(const Vec& p) const {
  if (p.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (!std::isfinite(p[i])) return false;
    if (!domain_[i].periodic && !(p[i] > domain_[i].lo && p[i] < domain_[i].hi)) return false;
  }
  return true;
}

Vec Chart::wrap(Vec p) const {
  for (int i = 0; i < dim() && i < p.size(); ++i) {
    const auto& iv = domain_[i];
    if (!iv.periodic) continue;
    double period = iv.hi - iv.lo;
    double t = std::fmod(p[i] - iv.lo, period);
    if (t < 0) t += period;
    p[i] = iv.lo + t;
  }
  return p;
}

Vec Chart::center() const {
  Vec c(dim());
  for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (domain_[i].lo + domain_[i].hi);
  return c;
}

std::vector<Vec> Chart::samples(int count, double inset, const std::vector<Vec>& pinned) const {
  std::vector<Vec> out;
  out.reserve(count + pinned.size());
  for (int s = 1; s <= count; ++s) {
    Vec p(dim());
    for (int i = 0; i < dim(); ++i) {
      double u = inset + (1.0 - 2.0 * inset) * halton(s, kPrimes[i]);
      p[i] = domain_[i].lo + u * (domain_[i].hi - domain_[i].lo);
    }
    out.push_back(std::move(p));
  }
  for (const auto& p : pinned) {
    require_dim(*this, p);
    out.push_back(p);
  }
  return out;
}

Chart Chart::extended(const Chart& other) const {
  auto names = names_;
  auto dom = domain_;
  names.insert(names.end(), other.names_.begin(), other.names_.end());
  dom.insert(dom.end(), other.domain_.begin(), other.domain_.end());
  return Chart(std::move(names), std::move(dom));
}

// ---------------------------------------------------------------- Christoffel

Vec Christoffel::contract(const Vec& u, const Vec& w) const {
  Vec out = Vec::Zero(n_);
  for (int k = 0; k < n_; ++k) {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (u[i] == 0.0) continue;
      for (int j = 0; j < n_; ++j) s += (*this)(k, i, j) * u[i] * w[j];
    }
    out[k] = s;
  }
  return out;
}

double Christoffel::asymmetry() const {
  double m = 0.0;
  for (int k = 0; k < n_; ++k)
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) m = std::max(m, std::abs((*this)(k, i, j) - (*this)(k, j, i)));
  return m;
}

// ---------------------------------------------------------------- Metric

Metric::Metric(Chart chart, std::vector<std::vector<Expr>> components)
    : chart_(std::move(chart)), exprs_(std::move(components)) {
  const int n = chart_.dim();
  if (static_cast<int>(exprs_.size()) != n)
    throw Error(ErrorCode::InvalidGeometry, "metric must be " + std::to_string(n) + "x" + std::to_string(n));
  progs_.resize(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(exprs_[i].size()) != n)
      throw Error(ErrorCode::InvalidGeometry, "metric must be " + std::to_string(n) + "x" + std::to_string(n));
    for (int j = 0; j < n; ++j) progs_[i].emplace_back(exprs_[i][j], chart_.names());
  }
  for (const auto& p : chart_.samples()) {
    Mat g = at(p);
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-14)
      throw Error(ErrorCode::InvalidGeometry, "metric is not symmetric");
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success || !g.allFinite())
      throw Error(ErrorCode::SingularMetric, "metric is not positive definite on the chart domain");
  }
}

Mat Metric::at(const Vec& p) const {
  require_dim(chart_, p);
  const int n = dim();
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = progs_[i][j].run(span_of(p));
  return g;
}

Mat Metric::at(const Vec& p, std::vector<Mat>& dg) const {
  require_dim(chart_, p);
  const int n = dim();
  Mat g(n, n);
  dg.assign(n, Mat::Zero(n, n));
  Vec grad(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      g(i, j) = progs_[i][j].gradient(span_of(p), grad);
      for (int a = 0; a < n; ++a) dg[a](i, j) = grad[a];
    }
  return g;
}

Mat Metric::at(const Vec& p, std::vector<Mat>& dg, std::vector<std::vector<Mat>>& ddg) const {
  require_dim(chart_, p);
  const int n = dim();
  Mat g(n, n);
  dg.assign(n, Mat::Zero(n, n));
  ddg.assign(n, std::vector<Mat>(n, Mat::Zero(n, n)));
  Vec grad(n);
  Mat hess(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      g(i, j) = progs_[i][j].hessian(span_of(p), grad, hess);
      for (int a = 0; a < n; ++a) {
        dg[a](i, j) = grad[a];
        for (int b = 0; b < n; ++b) ddg[a][b](i, j) = hess(a, b);
      }
    }
  return g;
}

// ---------------------------------------------------------------- Levi-Civita

namespace {

Mat checked_inverse(const Mat& g) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite())
    throw Error(ErrorCode::SingularMetric, "metric is not positive definite at the evaluation point");
  return llt.solve(Mat::Identity(g.rows(), g.cols()));
}

// Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij), the symbols of the first kind.
double first_kind(const std::vector<Mat>& dg, int l, int i, int j) {
  return 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
}

}  // namespace

Christoffel levi_civita(const Metric& metric, const Vec& p) {
  std::vector<Mat> dg;
  Mat g = metric.at(p, dg);
  Mat ginv = checked_inverse(g);
  const int n = metric.dim();
  Christoffel out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(k, l) * first_kind(dg, l, i, j);
        out(k, i, j) = s;
        out(k, j, i) = s;
      }
  return out;
}

Christoffel levi_civita(const Metric& metric, const Vec& p, std::vector<Christoffel>& dgamma) {
  std::vector<Mat> dg;
  std::vector<std::vector<Mat>> ddg;
  Mat g = metric.at(p, dg, ddg);
  Mat ginv = checked_inverse(g);
  const int n = metric.dim();
  Christoffel out(n);
  dgamma.assign(n, Christoffel(n));
  // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
  std::vector<Mat> dginv(n);
  for (int m = 0; m < n; ++m) dginv[m] = -ginv * dg[m] * ginv;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(k, l) * first_kind(dg, l, i, j);
        out(k, i, j) = out(k, j, i) = s;
        for (int m = 0; m < n; ++m) {
          double d = 0.0;
          for (int l = 0; l < n; ++l) {
            double dfirst = 0.5 * (ddg[m][i](j, l) + ddg[m][j](i, l) - ddg[m][l](i, j));
            d += dginv[m](k, l) * first_kind(dg, l, i, j) + ginv(k, l) * dfirst;
          }
          dgamma[m](k, i, j) = dgamma[m](k, j, i) = d;
        }
      }
  return out;
}

Christoffel horizontal_lift_christoffel(const Metric& base, const Vec& p) {
  const int n = base.dim();
  if (p.size() != 2 * n)
    throw Error(ErrorCode::InvalidArgument, "tangent-bundle point must have 2n coordinates");
  Vec x = p.head(n), y = p.tail(n);
  std::vector<Christoffel> dG;
  Christoffel G = levi_civita(base, x, dG);
  Christoffel out(2 * n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        out(k, i, j) = G(k, i, j);
        out(n + k, n + i, j) = G(k, j, i);
        out(n + k, i, n + j) = G(k, i, j);
      }
  // Γ̃^{q̄}_ij = y^p ∂_iΓ^q_jp + y^p Γ^m_jp Γ^q_im − y^l Γ^k_ij Γ^q_kl
  for (int q = 0; q < n; ++q)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int a = 0; a < n; ++a) {
          s += y[a] * dG[i](q, j, a);
          for (int m = 0; m < n; ++m) s += y[a] * G(m, j, a) * G(q, i, m);
          for (int k = 0; k < n; ++k) s -= y[a] * G(k, i, j) * G(q, k, a);
        }
        out(n + q, i, j) = s;
      }
  return out;
}

// ---------------------------------------------------------------- Connection

Connection Connection::from_metric(Metric metric) {
  Connection c;
  c.kind_ = Kind::LeviCivita;
  c.chart_ = metric.chart();
  c.metric_ = std::move(metric);
  return c;
}

Connection Connection::from_table(Chart chart, std::vector<std::vector<std::vector<Expr>>> coefficients) {
  const int n = chart.dim();
  if (static_cast<int>(coefficients.size()) != n)
    throw Error(ErrorCode::InvalidGeometry, "connection table must be n x n x n");
  Connection c;
  c.kind_ = Kind::Table;
  c.chart_ = std::move(chart);
  c.table_ = std::move(coefficients);
  c.table_progs_.resize(n);
  for (int k = 0; k < n; ++k) {
    if (static_cast<int>(c.table_[k].size()) != n)
      throw Error(ErrorCode::InvalidGeometry, "connection table must be n x n x n");
    c.table_progs_[k].resize(n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(c.table_[k][i].size()) != n)
        throw Error(ErrorCode::InvalidGeometry, "connection table must be n x n x n");
      for (int j = 0; j < n; ++j) c.table_progs_[k][i].emplace_back(c.table_[k][i][j], c.chart_.names());
    }
  }
  c.validate_symmetry();
  return c;
}

Connection Connection::product(Metric base, Chart total) {
  const int n = base.dim();
  if (total.dim() < n) throw Error(ErrorCode::InvalidGeometry, "total chart smaller than base");
  for (int i = 0; i < n; ++i)
    if (total.names()[i] != base.chart().names()[i])
      throw Error(ErrorCode::InvalidGeometry, "total chart must start with the base coordinates");
  Connection c;
  c.kind_ = Kind::Product;
  c.chart_ = std::move(total);
  c.metric_ = std::move(base);
  return c;
}

Connection Connection::horizontal_lift(Metric base, Chart total) {
  const int n = base.dim();
  if (total.dim() != 2 * n)
    throw Error(ErrorCode::InvalidGeometry, "tangent-bundle chart must have twice the base dimension");
  for (int i = 0; i < n; ++i)
    if (total.names()[i] != base.chart().names()[i])
      throw Error(ErrorCode::InvalidGeometry, "total chart must start with the base coordinates");
  Connection c;
  c.kind_ = Kind::HorizontalLift;
  c.chart_ = std::move(total);
  c.metric_ = std::move(base);
  c.validate_symmetry();
  return c;
}

Connection Connection::perturbed(int k, int i, double eps) const {
  if (k < 0 || i < 0 || k >= dim() || i >= dim())
    throw Error(ErrorCode::InvalidArgument, "perturbation index out of range");
  Connection c = *this;
  c.perturbations_.push_back({k, i, eps});
  return c;
}

void Connection::validate_symmetry() const {
  for (const auto& p : chart_.samples()) {
    double a = at(p).asymmetry();
    if (!(a <= 1e-12))
      throw Error(ErrorCode::NonSymmetricConnection,
                  "connection coefficients are not symmetric (max |G^k_ij - G^k_ji| = " + std::to_string(a) + ")");
  }
}

Christoffel Connection::at(const Vec& p) const {
  require_dim(chart_, p);
  const int n = dim();
  Christoffel out(n);
  switch (kind_) {
    case Kind::LeviCivita:
      out = levi_civita(metric_, p);
      break;
    case Kind::Table:
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) out(k, i, j) = table_progs_[k][i][j].run(span_of(p));
      break;
    case Kind::Product: {
      const int m = metric_.dim();
      Christoffel g = levi_civita(metric_, p.head(m));
      for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) out(k, i, j) = g(k, i, j);
      break;
    }
    case Kind::HorizontalLift:
      out = horizontal_lift_christoffel(metric_, p);
      break;
  }
  for (const auto& d : perturbations_) out(d.k, d.i, d.i) += d.eps;
  return out;
}

// ---------------------------------------------------------------- fields

VectorField::VectorField(Chart chart, std::vector<Expr> components)
    : chart_(std::move(chart)), exprs_(std::move(components)) {
  if (static_cast<int>(exprs_.size()) != chart_.dim())
    throw Error(ErrorCode::InvalidGeometry, "vector field has " + std::to_string(exprs_.size()) +
                                                " components, chart has " + std::to_string(chart_.dim()));
  for (const auto& e : exprs_) progs_.emplace_back(e, chart_.names());
}

Vec VectorField::at(const Vec& p) const {
  require_dim(chart_, p);
  Vec v(chart_.dim());
  for (int k = 0; k < chart_.dim(); ++k) v[k] = progs_[k].run(span_of(p));
  return v;
}

LocalField VectorField::jet(const Vec& p) const {
  require_dim(chart_, p);
  const int n = chart_.dim();
  LocalField f{Vec(n), Mat(n, n)};
  Vec grad(n);
  for (int k = 0; k < n; ++k) {
    f.value[k] = progs_[k].gradient(span_of(p), grad);
    f.jacobian.row(k) = grad.transpose();
  }
  return f;
}

Tangent covariant_derivative(const Connection& conn, const VectorField& x, const VectorField& y, const Vec& p) {
  if (x.chart().names() != conn.chart().names() || y.chart().names() != conn.chart().names())
    throw Error(ErrorCode::InvalidArgument, "fields and connection live on different charts");
  return {p, covariant(conn.at(p), x.at(p), y.jet(p))};
}

Tangent lie_bracket(const VectorField& x, const VectorField& y, const Vec& p) {
  if (x.chart().names() != y.chart().names())
    throw Error(ErrorCode::InvalidArgument, "fields live on different charts");
  return {p, bracket(x.jet(p), y.jet(p))};
}

Mat orthonormal_frame_matrix(const Mat& g) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite())
    throw Error(ErrorCode::SingularMetric, "metric is not positive definite at the evaluation point");
  const int n = static_cast<int>(g.rows());
  Mat e = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Vec v = Vec::Unit(n, i);
    // Two passes of modified Gram–Schmidt keep g(e_i, e_j) at rounding level.
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) v -= e.col(j).dot(g * v) * e.col(j);
    double norm = std::sqrt(v.dot(g * v));
    e.col(i) = v / norm;
  }
  return e;
}

std::vector<Tangent> orthonormal_frame(const Metric& metric, const Vec& p) {
  Mat e = orthonormal_frame_matrix(metric.at(p));
  std::vector<Tangent> out;
  for (int i = 0; i < e.cols(); ++i) out.push_back({p, e.col(i)});
  return out;
}

}  // namespace harmsec
