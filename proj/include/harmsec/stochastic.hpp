#pragma once

// Brownian paths on a chart by Euler–Maruyama, second-order increments and
// the integrals of first- and second-order forms along them.

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "harmsec/sections.hpp"

namespace harmsec {

/// One step of a second-order increment: dX and d[X, X].
struct SecondOrderStep {
  Vec dx;
  Mat dq;
};

struct PathIncrementSeries {
  std::uint64_t index = 0;
  std::vector<double> t;     // K + 1 times
  std::vector<Vec> x;        // K + 1 states (periodic coordinates wrapped)
  std::vector<Vec> dx;       // K increments, unwrapped
  std::vector<Mat> dq;       // K quadratic-variation increments g^{ij}(X_k) dt
  bool killed = false;       // stopped on leaving the chart domain
  bool singular = false;     // stopped where the metric is not positive definite

  std::size_t steps() const { return dx.size(); }
  bool censored() const { return killed || singular; }
};

struct BrownianOptions {
  double horizon = 1.0;
  double dt = 1e-2;
  long paths = 1000;
  std::uint64_t seed = 1;
  /// Each step's noise is the normalised sum of this many draws indexed by
  /// the finer step counter, so runs at dt and dt/m share one Brownian path.
  int substeps = 1;
  int workers = 0;
};

/// Steps K = T/dt; throws InvalidHorizon unless T ≥ 0, dt > 0 and T/dt is an integer.
long step_count(double horizon, double dt);

/// Euler–Maruyama with drift b^i = −½g^{jk}Γ^i_jk and diffusion the Cholesky
/// factor of g⁻¹; path p uses the counter stream (seed, p, step).
std::vector<PathIncrementSeries> brownian_paths(const Metric& g, const Vec& x0, const BrownianOptions& opt);
PathIncrementSeries brownian_path(const Metric& g, const Vec& x0, const BrownianOptions& opt, std::uint64_t index);

/// Monte-Carlo estimate of E f(X_t) at each of `times`, without storing paths.
struct FunctionalEstimate {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> stderr_;
  long paths = 0;
  long censored = 0;
};
FunctionalEstimate brownian_functional(const Metric& g, const Vec& x0, const BrownianOptions& opt,
                                       const Expr& f, const std::vector<double>& times);

/// dY^a = ∂_iF^a dX^i + ½∂_ijF^a d[X^i,X^j], d[Y,Y] = ∂F d[X,X] ∂Fᵀ
SecondOrderStep second_order_pushforward(const std::vector<Expr>& F, const std::vector<std::string>& vars,
                                         const Vec& x, const SecondOrderStep& step);

struct SecondOrderForm {
  std::vector<Expr> first;                // θ_i
  std::vector<std::vector<Expr>> second;  // θ_ij, symmetric
};

/// ∫θ_i dX^i + ∫θ_ij d[X^i,X^j] with coefficients at the left point.
double integrate_second_order_form(const SecondOrderForm& form, const Chart& chart, const PathIncrementSeries& path);
/// ∫b_ij(X) d[X^i,X^j]
double quadratic_integral(const std::vector<std::vector<Expr>>& b, const Chart& chart, const PathIncrementSeries& path);
/// ∫θ_k (dX^k + ½Γ^k_ij d[X^i,X^j])
double ito_integral(const std::vector<Expr>& theta, const Connection& conn, const PathIncrementSeries& path);

/// Writes "path,t,<coordinates>" rows.
void write_paths_csv(std::ostream& os, const Chart& chart, const std::vector<PathIncrementSeries>& paths);

// ---------------------------------------------------------------- experiments

/// A first-order form on a chart, returning its components at a point.
using Covector = std::function<Vec(const Vec&)>;
Covector covector_from_expressions(const Chart& chart, const std::vector<Expr>& components);
/// θ^α = dy^α − h^α_i dx^i
Covector canonical_vertical_form(std::shared_ptr<const SubmersionSpace> s, int alpha);
/// Throws NonVerticalForm unless |θ(H(∂_i))| ≤ tol at the sample points.
void require_vertical(const SubmersionSpace& s, const Covector& theta, double tol = 1e-10);

struct Statistic {
  double mean = 0;
  double stderr_ = 0;
  double max_abs = 0;
  long count = 0;
};
Statistic summarize(const std::vector<double>& values);

struct ExperimentReport {
  std::string kind;           // "second_fundamental_form" or "tension"
  long paths = 0;
  long censored = 0;
  std::vector<double> lhs;    // per uncensored path, in path order
  std::vector<double> rhs;
  std::vector<double> difference;
  std::vector<double> literal_difference;  // against the literal vertical tension / form
  Statistic lhs_stat, rhs_stat, difference_stat, literal_stat;
  /// ∫θ(tr C)dt along each path, from the deterministic trace field.
  std::vector<double> trace_c_integral;
  double tolerance = 1e-10;
  bool pathwise() const { return difference_stat.max_abs <= tolerance; }
};

struct ExperimentOptions {
  BrownianOptions brownian;
  std::optional<Vec> x0;       // default: centre of the base chart
  double tolerance = 1e-10;
};

/// ∫θ(β_σ)(dX,dX) against ∫θ(β^v_σ)(dX,dX) along Brownian paths on the base.
ExperimentReport second_fundamental_form_experiment(const Section& s, const Covector& theta,
                                                    const ExperimentOptions& opt);
/// ∫θ(τ_σ)(B_t)dt against ∫θ(τ^v_σ)(B_t)dt.
ExperimentReport tension_experiment(const Section& s, const Covector& theta, const ExperimentOptions& opt);
/// Both experiments over one set of paths.
std::pair<ExperimentReport, ExperimentReport> path_experiments(const Section& s, const Covector& theta,
                                                               const ExperimentOptions& opt);

}  // namespace harmsec
