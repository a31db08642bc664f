#pragma once

// Single-chart Riemannian and affine geometry: metrics, symmetric
// connections, covariant derivatives, brackets and orthonormal frames.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "harmsec/expr.hpp"

namespace harmsec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;
};

class Chart {
 public:
  Chart() = default;
  Chart(std::vector<std::string> names, std::vector<Interval> domain);

  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Interval>& domain() const { return domain_; }
  std::optional<int> index_of(std::string_view name) const;

  /// True when every non-periodic coordinate lies strictly inside its interval.
  bool contains(const Vec& p) const;
  /// Maps periodic coordinates back into [lo, hi).
  Vec wrap(Vec p) const;
  Vec center() const;

  /// Halton points inset by `inset` (fraction of each interval) from the
  /// boundary, followed by any pinned points.
  std::vector<Vec> samples(int count = 64, double inset = 0.05,
                           const std::vector<Vec>& pinned = {}) const;

  /// A chart whose coordinates are this chart's followed by `other`'s.
  Chart extended(const Chart& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Interval> domain_;
};

/// Christoffel symbols Γ^k_ij at one point, stored k-major.
class Christoffel {
 public:
  explicit Christoffel(int dim = 0) : n_(dim), c_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int k, int i, int j) { return c_[(static_cast<std::size_t>(k) * n_ + i) * n_ + j]; }
  double operator()(int k, int i, int j) const { return c_[(static_cast<std::size_t>(k) * n_ + i) * n_ + j]; }
  /// Γ(u, w)^k = Γ^k_ij u^i w^j
  Vec contract(const Vec& u, const Vec& w) const;
  /// max |Γ^k_ij − Γ^k_ji|
  double asymmetry() const;

 private:
  int n_;
  std::vector<double> c_;
};

/// A symmetric matrix of coefficient expressions over a chart.
class Metric {
 public:
  Metric() = default;
  /// Validates symmetry (1e-14) and positive definiteness at the chart's
  /// default sample points; throws InvalidGeometry / SingularMetric.
  Metric(Chart chart, std::vector<std::vector<Expr>> components);

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  const Expr& component(int i, int j) const { return exprs_[i][j]; }

  Mat at(const Vec& p) const;
  /// Value and first partials: dg[a](i, j) = ∂_a g_ij.
  Mat at(const Vec& p, std::vector<Mat>& dg) const;
  /// Value, first and second partials: ddg[a][b](i, j) = ∂_a ∂_b g_ij.
  Mat at(const Vec& p, std::vector<Mat>& dg, std::vector<std::vector<Mat>>& ddg) const;

  double inner(const Vec& p, const Vec& u, const Vec& w) const { return u.dot(at(p) * w); }

 private:
  Chart chart_;
  std::vector<std::vector<Expr>> exprs_;
  std::vector<std::vector<Program>> progs_;
};

/// Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij). Throws SingularMetric.
Christoffel levi_civita(const Metric& metric, const Vec& p);
/// Levi-Civita symbols together with their partials dgamma[m] = ∂_m Γ.
Christoffel levi_civita(const Metric& metric, const Vec& p, std::vector<Christoffel>& dgamma);

/// Horizontal lift ∇^h of the base Levi-Civita connection to TM, in induced
/// coordinates (x, y). Symmetric only when the base connection is flat.
Christoffel horizontal_lift_christoffel(const Metric& base, const Vec& p);

class Connection {
 public:
  enum class Provenance { LeviCivita, UserSupplied };
  enum class Kind { LeviCivita, Table, Product, HorizontalLift };

  Connection() = default;

  static Connection from_metric(Metric metric);
  /// coefficients[k][i][j] = Γ^k_ij; rejected unless symmetric within 1e-12
  /// at the sample points.
  static Connection from_table(Chart chart, std::vector<std::vector<std::vector<Expr>>> coefficients);
  /// Product of the base Levi-Civita connection with a flat fibre connection.
  static Connection product(Metric base, Chart total);
  /// Horizontal lift to TM; `total` must be the base chart followed by n fibre coordinates.
  static Connection horizontal_lift(Metric base, Chart total);

  /// Adds eps to Γ^k_ii (diagonal slots keep the connection symmetric).
  Connection perturbed(int k, int i, double eps) const;

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  Kind kind() const { return kind_; }
  Provenance provenance() const {
    return kind_ == Kind::LeviCivita ? Provenance::LeviCivita : Provenance::UserSupplied;
  }
  const Metric& metric() const { return metric_; }
  const std::vector<std::vector<std::vector<Expr>>>& table() const { return table_; }
  struct Perturbation {
    int k, i;
    double eps;
  };
  const std::vector<Perturbation>& perturbations() const { return perturbations_; }

  Christoffel at(const Vec& p) const;

 private:
  void validate_symmetry() const;

  Kind kind_ = Kind::Table;
  Chart chart_;
  Metric metric_;  // LeviCivita: metric on chart_; Product/HorizontalLift: base metric
  std::vector<std::vector<std::vector<Expr>>> table_;
  std::vector<std::vector<std::vector<Program>>> table_progs_;
  std::vector<Perturbation> perturbations_;
};

struct Tangent {
  Vec base;
  Vec v;
};

/// Value and Jacobian of a vector field at one point: jac(c, a) = ∂_a V^c.
struct LocalField {
  Vec value;
  Mat jacobian;

  static LocalField constant(const Vec& v) {
    return {v, Mat::Zero(v.size(), v.size())};
  }
};

/// ∇_U V at a point, U given by its value there.
inline Vec covariant(const Christoffel& gamma, const Vec& u, const LocalField& v) {
  return v.jacobian * u + gamma.contract(u, v.value);
}

/// [U, V] = U(V) − V(U)
inline Vec bracket(const LocalField& u, const LocalField& v) {
  return v.jacobian * u.value - u.jacobian * v.value;
}

/// f·V for a scalar with value f and gradient df.
inline LocalField scaled(double f, const Vec& df, const LocalField& v) {
  return {f * v.value, f * v.jacobian + v.value * df.transpose()};
}

class VectorField {
 public:
  VectorField() = default;
  VectorField(Chart chart, std::vector<Expr> components);

  const Chart& chart() const { return chart_; }
  const std::vector<Expr>& components() const { return exprs_; }

  Vec at(const Vec& p) const;
  LocalField jet(const Vec& p) const;

 private:
  Chart chart_;
  std::vector<Expr> exprs_;
  std::vector<Program> progs_;
};

/// (∇_X Y)^k = X^i ∂_i Y^k + Γ^k_ij X^i Y^j
Tangent covariant_derivative(const Connection& conn, const VectorField& x,
                             const VectorField& y, const Vec& p);

/// [X,Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k
Tangent lie_bracket(const VectorField& x, const VectorField& y, const Vec& p);

/// Gram–Schmidt on the coordinate frame, in index order.
std::vector<Tangent> orthonormal_frame(const Metric& metric, const Vec& p);
/// The same frame as the columns of a matrix.
Mat orthonormal_frame_matrix(const Mat& g);

}  // namespace harmsec
