#include "harmsec/flow.hpp"

#include <cmath>
#include <numbers>

#include "harmsec/error.hpp"
#include "harmsec/parallel.hpp"

namespace harmsec {

long SectionGrid::points() const {
  long m = 1;
  for (int i = 0; i < dim; ++i) m *= grid;
  return m;
}

Vec SectionGrid::coordinate(long k) const {
  Vec x(dim);
  for (int i = dim - 1; i >= 0; --i) {
    x[i] = lo[i] + static_cast<double>(k % grid) * spacing(i);
    k /= grid;
  }
  return x;
}

void require_flow_space(const SubmersionSpace& s) {
  if (s.connection().kind() != Connection::Kind::Product || !s.connection().perturbations().empty())
    throw Error(ErrorCode::InvalidGeometry, "the flow needs a product connection");
  if (s.lift_kind() != SubmersionSpace::LiftKind::Explicit)
    throw Error(ErrorCode::InvalidGeometry, "the flow needs the trivial horizontal lift");
  for (const auto& row : s.lift_expressions())
    for (const auto& e : row)
      if (!e.is_constant() || eval(e, {}) != 0.0)
        throw Error(ErrorCode::InvalidGeometry, "the flow needs the trivial horizontal lift");
  for (const auto& iv : s.base_chart().domain())
    if (!iv.periodic) throw Error(ErrorCode::InvalidGeometry, "the flow needs a periodic (torus) base");
  const int n = s.n();
  for (const auto& x : s.base_chart().samples(8)) {
    Mat g = s.base_metric().at(x);
    if ((g - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-14)
      throw Error(ErrorCode::InvalidGeometry, "the flow needs a Euclidean base metric");
  }
}

SectionGrid sample_section(const Section& s, int grid) {
  require_flow_space(s.space());
  if (grid < 4) throw Error(ErrorCode::InvalidArgument, "flow grid needs at least 4 points per axis");
  SectionGrid g;
  g.dim = s.space().n();
  g.grid = grid;
  g.fibres = s.space().r();
  for (const auto& iv : s.space().base_chart().domain()) {
    g.lo.push_back(iv.lo);
    g.hi.push_back(iv.hi);
  }
  const long M = g.points();
  g.values.assign(static_cast<std::size_t>(M * g.fibres), 0.0);
  const int n = g.dim;
  for (long k = 0; k < M; ++k) {
    Vec p = s.point(g.coordinate(k));
    for (int a = 0; a < g.fibres; ++a) g.values[a * M + k] = p[n + a];
  }
  return g;
}

namespace {

// Neighbour of k one step along `axis` (±1), with periodic wrap.
long neighbour(const SectionGrid& g, long k, int axis, int dir) {
  long stride = 1;
  for (int i = g.dim - 1; i > axis; --i) stride *= g.grid;
  long c = (k / stride) % g.grid;
  long nc = (c + dir + g.grid) % g.grid;
  return k + (nc - c) * stride;
}

double neumaier_sum(const std::vector<double>& v) {
  double s = 0, comp = 0;
  for (double x : v) {
    double t = s + x;
    comp += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + comp;
}

}  // namespace

double vertical_energy(const SectionGrid& g) {
  const long M = g.points();
  double vol = 1;
  for (int i = 0; i < g.dim; ++i) vol *= g.spacing(i);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(M * g.fibres * g.dim));
  for (int a = 0; a < g.fibres; ++a)
    for (long k = 0; k < M; ++k)
      for (int i = 0; i < g.dim; ++i) {
        double d = (g.values[a * M + neighbour(g, k, i, 1)] - g.values[a * M + k]) / g.spacing(i);
        terms.push_back(d * d);
      }
  return 0.5 * vol * neumaier_sum(terms);
}

std::vector<double> discrete_tension(const SectionGrid& g, int workers) {
  const long M = g.points();
  std::vector<double> out(g.values.size());
  auto body = [&](std::size_t k) {
    for (int a = 0; a < g.fibres; ++a) {
      const double* v = g.values.data() + a * M;
      double c = v[k], s = 0;
      for (int i = 0; i < g.dim; ++i) {
        double h = g.spacing(i);
        s += (v[neighbour(g, static_cast<long>(k), i, 1)] - 2 * c + v[neighbour(g, static_cast<long>(k), i, -1)]) /
             (h * h);
      }
      out[a * M + k] = s;
    }
  };
  if (M >= 16384)
    parallel_for(static_cast<std::size_t>(M), workers, body);
  else
    for (long k = 0; k < M; ++k) body(static_cast<std::size_t>(k));
  return out;
}

double mode_amplitude(const SectionGrid& g, int mode) {
  const long M = g.points();
  const double L = g.hi[0] - g.lo[0];
  double s = 0, c = 0;
  for (long k = 0; k < M; ++k) {
    double x = g.coordinate(k)[0] - g.lo[0];
    double w = 2 * std::numbers::pi * mode * x / L;
    s += g.values[k] * std::sin(w);
    c += g.values[k] * std::cos(w);
  }
  return 2.0 * std::hypot(s, c) / static_cast<double>(M);
}

FlowResult tension_flow(SectionGrid g, const FlowOptions& opt) {
  if (opt.steps < 0 || !(opt.dt > 0) || !std::isfinite(opt.dt))
    throw Error(ErrorCode::InvalidArgument, "flow needs dt > 0 and a non-negative step count");
  double lambda_max = 0;
  for (int i = 0; i < g.dim; ++i) lambda_max += 4.0 / (g.spacing(i) * g.spacing(i));
  if (opt.dt * lambda_max >= 2.0)
    throw Error(ErrorCode::StepUnstable, "dt * lambda_max = " + std::to_string(opt.dt * lambda_max) +
                                             " >= 2; the explicit step is unstable");
  FlowResult res;
  auto max_abs = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  auto record = [&](long step, double e) {
    res.trace.step.push_back(step);
    res.trace.time.push_back(static_cast<double>(step) * opt.dt);
    res.trace.energy.push_back(e);
    res.trace.mode1.push_back(mode_amplitude(g, 1));
    res.trace.mode2.push_back(mode_amplitude(g, 2));
  };
  double e = vertical_energy(g);
  res.initial_energy = e;
  std::vector<double> tau = discrete_tension(g, opt.workers);
  res.initial_max_tau_v = max_abs(tau);
  record(0, e);
  const double slack = opt.energy_slack * std::max(1.0, res.initial_energy);
  res.max_energy_increase = -std::numeric_limits<double>::infinity();
  for (long s = 1; s <= opt.steps; ++s) {
    for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] += opt.dt * tau[k];
    double e_new = vertical_energy(g);
    res.max_energy_increase = std::max(res.max_energy_increase, e_new - e);
    if (e_new > e + slack) {
      res.monotone = false;
      throw Error(ErrorCode::StepUnstable, "vertical energy increased at step " + std::to_string(s));
    }
    e = e_new;
    tau = discrete_tension(g, opt.workers);
    if (opt.record_every > 0 && (s % opt.record_every == 0 || s == opt.steps)) record(s, e);
  }
  if (opt.steps == 0) res.max_energy_increase = 0;
  res.steps = opt.steps;
  res.final_time = static_cast<double>(opt.steps) * opt.dt;
  res.final_energy = e;
  res.final_max_tau_v = max_abs(tau);
  res.final_grid = std::move(g);
  return res;
}

FlowResult tension_flow(const Section& s, const FlowOptions& opt) { return tension_flow(sample_section(s, opt.grid), opt); }

}  // namespace harmsec
