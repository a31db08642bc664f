#include "harmsec/stochastic.hpp"

#include <array>
#include <cmath>
#include <iomanip>

#include "harmsec/error.hpp"
#include "harmsec/parallel.hpp"
#include "harmsec/random.hpp"

namespace harmsec {

namespace {

std::span<const double> span_of(const Vec& p) { return {p.data(), static_cast<std::size_t>(p.size())}; }

double neumaier(const std::vector<double>& v) {
  double s = 0, c = 0;
  for (double x : v) {
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

// Drift and diffusion data at x. Returns false where g is not positive definite.
struct Coefficients {
  Mat ginv;
  Mat chol;  // lower factor L with L Lᵀ = g⁻¹
  Vec drift;
};

bool coefficients(const Metric& m, const Vec& x, Coefficients& c) {
  std::vector<Mat> dg;
  Mat g = m.at(x, dg);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite()) return false;
  const int n = m.dim();
  c.ginv = llt.solve(Mat::Identity(n, n));
  Eigen::LLT<Mat> li(c.ginv);
  if (li.info() != Eigen::Success) return false;
  c.chol = li.matrixL();
  // b^i = −½ g^{jk} Γ^i_jk with Γ^i_jk = g^{il} Γ_ljk
  Vec first = Vec::Zero(n);  // g^{jk} Γ_ljk
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        first[l] += c.ginv(j, k) * 0.5 * (dg[j](k, l) + dg[k](j, l) - dg[l](j, k));
  c.drift = -0.5 * c.ginv * first;
  return true;
}

// Runs one path, calling visit(k, x_k) for every state kept and
// step(k, dx, dq) for every accepted step.
template <class Visit, class Step>
void simulate(const Metric& m, const Vec& x0, const BrownianOptions& opt, std::uint64_t index, long K, Visit&& visit,
              Step&& step, bool& killed, bool& singular) {
  const Chart& chart = m.chart();
  const int n = m.dim();
  const double sq = std::sqrt(opt.dt);
  const int sub = std::max(1, opt.substeps);
  const double norm = 1.0 / std::sqrt(static_cast<double>(sub));
  Vec x = chart.wrap(x0);
  Vec xi(n);
  Coefficients c;
  killed = singular = false;
  visit(0, x);
  for (long k = 0; k < K; ++k) {
    if (!coefficients(m, x, c)) {
      singular = true;
      return;
    }
    xi.setZero();
    for (int s = 0; s < sub; ++s) {
      auto fine = static_cast<std::uint32_t>(k * sub + s);
      for (int b = 0; 2 * b < n; ++b) {
        auto z = normal_pair(opt.seed, index, fine, static_cast<std::uint32_t>(b));
        xi[2 * b] += z[0];
        if (2 * b + 1 < n) xi[2 * b + 1] += z[1];
      }
    }
    xi *= norm;
    Vec dx = c.drift * opt.dt + c.chol * xi * sq;
    Vec next = x + dx;
    if (!chart.contains(next)) {
      killed = true;
      return;
    }
    step(k, dx, Mat(c.ginv * opt.dt));
    x = chart.wrap(next);
    visit(k + 1, x);
  }
}

}  // namespace

long step_count(double horizon, double dt) {
  if (!(horizon >= 0) || !std::isfinite(horizon) || !(dt > 0) || !std::isfinite(dt))
    throw Error(ErrorCode::InvalidHorizon, "horizon must be >= 0 and dt > 0");
  double r = horizon / dt;
  long K = std::lround(r);
  if (std::abs(r - static_cast<double>(K)) > 1e-9 * std::max(1.0, r))
    throw Error(ErrorCode::InvalidHorizon, "horizon is not an integer multiple of dt");
  return K;
}

PathIncrementSeries brownian_path(const Metric& g, const Vec& x0, const BrownianOptions& opt, std::uint64_t index) {
  long K = step_count(opt.horizon, opt.dt);
  if (!g.chart().contains(g.chart().wrap(x0)))
    throw Error(ErrorCode::InvalidArgument, "starting point is outside the chart domain");
  PathIncrementSeries p;
  p.index = index;
  p.t.reserve(K + 1);
  p.x.reserve(K + 1);
  simulate(
      g, x0, opt, index, K,
      [&](long k, const Vec& x) {
        p.t.push_back(static_cast<double>(k) * opt.dt);
        p.x.push_back(x);
      },
      [&](long, const Vec& dx, const Mat& dq) {
        p.dx.push_back(dx);
        p.dq.push_back(dq);
      },
      p.killed, p.singular);
  return p;
}

std::vector<PathIncrementSeries> brownian_paths(const Metric& g, const Vec& x0, const BrownianOptions& opt) {
  step_count(opt.horizon, opt.dt);
  if (opt.paths < 0) throw Error(ErrorCode::InvalidArgument, "path count must be non-negative");
  std::vector<PathIncrementSeries> out(static_cast<std::size_t>(opt.paths));
  parallel_for(out.size(), opt.workers, [&](std::size_t i) { out[i] = brownian_path(g, x0, opt, i); });
  return out;
}

FunctionalEstimate brownian_functional(const Metric& g, const Vec& x0, const BrownianOptions& opt, const Expr& f,
                                       const std::vector<double>& times) {
  long K = step_count(opt.horizon, opt.dt);
  if (!g.chart().contains(g.chart().wrap(x0)))
    throw Error(ErrorCode::InvalidArgument, "starting point is outside the chart domain");
  std::vector<long> at;
  for (double t : times) {
    long k = step_count(t, opt.dt);
    if (k > K) throw Error(ErrorCode::InvalidHorizon, "requested time beyond the horizon");
    at.push_back(k);
  }
  Program prog(f, g.chart().names());
  const std::size_t N = static_cast<std::size_t>(opt.paths), T = times.size();
  std::vector<double> values(N * T, 0.0);
  std::vector<char> censored(N, 0);
  parallel_for(N, opt.workers, [&](std::size_t i) {
    bool killed = false, singular = false;
    simulate(
        g, x0, opt, i, K,
        [&](long k, const Vec& x) {
          for (std::size_t j = 0; j < T; ++j)
            if (at[j] == k) values[i * T + j] = prog.run(span_of(x));
        },
        [](long, const Vec&, const Mat&) {}, killed, singular);
    censored[i] = killed || singular;
  });
  FunctionalEstimate est;
  est.times = times;
  est.paths = opt.paths;
  for (char c : censored) est.censored += c;
  for (std::size_t j = 0; j < T; ++j) {
    std::vector<double> col;
    for (std::size_t i = 0; i < N; ++i)
      if (!censored[i]) col.push_back(values[i * T + j]);
    auto s = summarize(col);
    est.mean.push_back(s.mean);
    est.stderr_.push_back(s.stderr_);
  }
  return est;
}

SecondOrderStep second_order_pushforward(const std::vector<Expr>& F, const std::vector<std::string>& vars,
                                         const Vec& x, const SecondOrderStep& step) {
  const int n = static_cast<int>(vars.size()), m = static_cast<int>(F.size());
  if (x.size() != n || step.dx.size() != n || step.dq.rows() != n || step.dq.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "second-order step has the wrong dimension");
  Mat J(m, n);
  Vec dy(m);
  Vec grad(n);
  Mat hess(n, n);
  for (int a = 0; a < m; ++a) {
    Program p(F[a], vars);
    p.hessian(span_of(x), grad, hess);
    J.row(a) = grad.transpose();
    dy[a] = grad.dot(step.dx) + 0.5 * (hess.cwiseProduct(step.dq)).sum();
  }
  return {dy, J * step.dq * J.transpose()};
}

namespace {

std::vector<Program> compile(const std::vector<Expr>& e, const Chart& chart) {
  std::vector<Program> out;
  for (const auto& x : e) out.emplace_back(x, chart.names());
  return out;
}

std::vector<std::vector<Program>> compile(const std::vector<std::vector<Expr>>& e, const Chart& chart) {
  std::vector<std::vector<Program>> out;
  for (const auto& row : e) out.push_back(compile(row, chart));
  return out;
}

void require_square(const std::vector<std::vector<Expr>>& b, int n, const char* what) {
  if (static_cast<int>(b.size()) != n) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be n x n");
  for (const auto& row : b)
    if (static_cast<int>(row.size()) != n) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be n x n");
}

double quadratic_sum(const std::vector<std::vector<Program>>& b, const PathIncrementSeries& path) {
  std::vector<double> terms;
  const int n = static_cast<int>(b.size());
  for (std::size_t k = 0; k < path.steps(); ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) terms.push_back(b[i][j].run(span_of(path.x[k])) * path.dq[k](i, j));
  return neumaier(terms);
}

}  // namespace

double integrate_second_order_form(const SecondOrderForm& form, const Chart& chart, const PathIncrementSeries& path) {
  const int n = chart.dim();
  if (static_cast<int>(form.first.size()) != n) throw Error(ErrorCode::InvalidArgument, "form must have n components");
  require_square(form.second, n, "second-order coefficients");
  auto second = compile(form.second, chart);
  for (const auto& p : chart.samples(8))
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::abs(second[i][j].run(span_of(p)) - second[j][i].run(span_of(p))) > 1e-14)
          throw Error(ErrorCode::InvalidArgument, "second-order coefficients are not symmetric");
  auto first = compile(form.first, chart);
  std::vector<double> terms;
  for (std::size_t k = 0; k < path.steps(); ++k)
    for (int i = 0; i < n; ++i) terms.push_back(first[i].run(span_of(path.x[k])) * path.dx[k][i]);
  return neumaier(terms) + quadratic_sum(second, path);
}

double quadratic_integral(const std::vector<std::vector<Expr>>& b, const Chart& chart, const PathIncrementSeries& path) {
  require_square(b, chart.dim(), "bilinear form");
  return quadratic_sum(compile(b, chart), path);
}

double ito_integral(const std::vector<Expr>& theta, const Connection& conn, const PathIncrementSeries& path) {
  const int n = conn.dim();
  if (static_cast<int>(theta.size()) != n) throw Error(ErrorCode::InvalidArgument, "form must have n components");
  auto th = compile(theta, conn.chart());
  std::vector<double> terms;
  for (std::size_t k = 0; k < path.steps(); ++k) {
    auto G = conn.at(path.x[k]);
    Vec corr = Vec::Zero(n);
    for (int c = 0; c < n; ++c)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) corr[c] += G(c, i, j) * path.dq[k](i, j);
    for (int c = 0; c < n; ++c) terms.push_back(th[c].run(span_of(path.x[k])) * (path.dx[k][c] + 0.5 * corr[c]));
  }
  return neumaier(terms);
}

void write_paths_csv(std::ostream& os, const Chart& chart, const std::vector<PathIncrementSeries>& paths) {
  os << "path,t";
  for (const auto& n : chart.names()) os << ',' << n;
  os << '\n' << std::setprecision(17);
  for (const auto& p : paths)
    for (std::size_t k = 0; k < p.x.size(); ++k) {
      os << p.index << ',' << p.t[k];
      for (int i = 0; i < p.x[k].size(); ++i) os << ',' << p.x[k][i];
      os << '\n';
    }
}

// ---------------------------------------------------------------- experiments

Statistic summarize(const std::vector<double>& v) {
  Statistic s;
  s.count = static_cast<long>(v.size());
  if (v.empty()) return s;
  s.mean = neumaier(v) / static_cast<double>(v.size());
  std::vector<double> sq;
  for (double x : v) {
    sq.push_back((x - s.mean) * (x - s.mean));
    s.max_abs = std::max(s.max_abs, std::abs(x));
  }
  if (v.size() > 1) s.stderr_ = std::sqrt(neumaier(sq) / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return s;
}

Covector covector_from_expressions(const Chart& chart, const std::vector<Expr>& components) {
  if (static_cast<int>(components.size()) != chart.dim())
    throw Error(ErrorCode::InvalidArgument, "form has " + std::to_string(components.size()) +
                                                " components, chart has " + std::to_string(chart.dim()));
  auto progs = std::make_shared<std::vector<Program>>(compile(components, chart));
  return [progs](const Vec& p) {
    Vec out(static_cast<Eigen::Index>(progs->size()));
    for (std::size_t i = 0; i < progs->size(); ++i) out[i] = (*progs)[i].run(span_of(p));
    return out;
  };
}

Covector canonical_vertical_form(std::shared_ptr<const SubmersionSpace> s, int alpha) {
  if (alpha < 0 || alpha >= s->r()) throw Error(ErrorCode::InvalidArgument, "fibre index out of range");
  return [s, alpha](const Vec& p) {
    Vec out = Vec::Zero(s->dim());
    out[s->n() + alpha] = 1.0;
    out.head(s->n()) = -s->lift(p).row(alpha).transpose();
    return out;
  };
}

void require_vertical(const SubmersionSpace& s, const Covector& theta, double tol) {
  for (const auto& p : s.total_chart().samples()) {
    Vec th = theta(p);
    for (int i = 0; i < s.n(); ++i) {
      double v = th.dot(s.horizontal_lift({p.head(s.n()), Vec::Unit(s.n(), i)}, p));
      if (!(std::abs(v) <= tol))
        throw Error(ErrorCode::NonVerticalForm,
                    "form does not vanish on H(d/d" + s.total_chart().names()[i] + "): value " + std::to_string(v));
    }
  }
}

namespace {

// Per uncensored path: {lhs, rhs, literal, trace of C} for the quadratic
// (second fundamental form) and the time (tension) experiments.
struct PathSums {
  std::array<double, 4> form{}, tension{};
};

struct ExperimentRun {
  long paths = 0;
  std::vector<char> censored;
  std::vector<PathSums> sums;
};

ExperimentRun run_paths(const Section& s, const Covector& theta, const ExperimentOptions& opt) {
  const auto& S = s.space();
  require_vertical(S, theta);
  Vec x0 = opt.x0.value_or(S.base_chart().center());
  auto paths = brownian_paths(S.base_metric(), x0, opt.brownian);
  const std::size_t N = paths.size();
  const double dt = opt.brownian.dt;
  ExperimentRun run;
  run.paths = static_cast<long>(N);
  run.censored.resize(N);
  run.sums.resize(N);
  parallel_for(N, opt.brownian.workers, [&](std::size_t i) {
    const auto& p = paths[i];
    run.censored[i] = p.censored();
    if (p.censored()) return;
    std::vector<double> form[4], time[4];
    for (std::size_t k = 0; k < p.steps(); ++k) {
      auto t = second_fundamental_forms(s, p.x[k]);
      Vec th = theta(s.point(p.x[k]));
      const Mat& dq = p.dq[k];
      for (int a = 0; a < t.n; ++a)
        for (int b = 0; b < t.n; ++b) {
          double w = dq(a, b);
          form[0].push_back(th.dot(t.beta[a * t.n + b]) * w);
          form[1].push_back(th.dot(t.beta_v[a * t.n + b]) * w);
          form[2].push_back(th.dot(t.beta_v_literal[a * t.n + b]) * w);
        }
      double trc = th.dot(t.tr_C) * dt;
      form[3].push_back(trc);
      time[0].push_back(th.dot(t.tau) * dt);
      time[1].push_back(th.dot(t.tau_v) * dt);
      time[2].push_back(th.dot(t.tau_v_literal) * dt);
      time[3].push_back(trc);
    }
    for (int j = 0; j < 4; ++j) {
      run.sums[i].form[j] = neumaier(form[j]);
      run.sums[i].tension[j] = neumaier(time[j]);
    }
  });
  return run;
}

ExperimentReport build_report(const char* kind, const ExperimentRun& run, bool tension, double tolerance) {
  ExperimentReport rep;
  rep.kind = kind;
  rep.paths = run.paths;
  rep.tolerance = tolerance;
  for (std::size_t i = 0; i < run.sums.size(); ++i) {
    if (run.censored[i]) {
      ++rep.censored;
      continue;
    }
    const auto& v = tension ? run.sums[i].tension : run.sums[i].form;
    rep.lhs.push_back(v[0]);
    rep.rhs.push_back(v[1]);
    rep.difference.push_back(v[0] - v[1]);
    rep.literal_difference.push_back(v[0] - v[2]);
    rep.trace_c_integral.push_back(v[3]);
  }
  rep.lhs_stat = summarize(rep.lhs);
  rep.rhs_stat = summarize(rep.rhs);
  rep.difference_stat = summarize(rep.difference);
  rep.literal_stat = summarize(rep.literal_difference);
  return rep;
}

}  // namespace

ExperimentReport second_fundamental_form_experiment(const Section& s, const Covector& theta,
                                                    const ExperimentOptions& opt) {
  return build_report("second_fundamental_form", run_paths(s, theta, opt), false, opt.tolerance);
}

ExperimentReport tension_experiment(const Section& s, const Covector& theta, const ExperimentOptions& opt) {
  return build_report("tension", run_paths(s, theta, opt), true, opt.tolerance);
}

std::pair<ExperimentReport, ExperimentReport> path_experiments(const Section& s, const Covector& theta,
                                                               const ExperimentOptions& opt) {
  auto run = run_paths(s, theta, opt);
  return {build_report("second_fundamental_form", run, false, opt.tolerance),
          build_report("tension", run, true, opt.tolerance)};
}

}  // namespace harmsec
