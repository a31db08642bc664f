#pragma once

// Explicit vertical-tension flow σ ← σ + dt·τ^v_σ for sections of a flat
// product over a flat torus, on a periodic grid.

#include <vector>

#include "harmsec/sections.hpp"

namespace harmsec {

struct FlowOptions {
  int grid = 128;            // points per base direction
  double dt = 1e-3;
  long steps = 100000;
  long record_every = 100;   // energy / mode samples kept in the trace
  int workers = 0;
  double energy_slack = 1e-12;
};

/// Fibre values on a periodic grid, component-major: values[α·M + k] with
/// M = grid^d and k the row-major grid index.
struct SectionGrid {
  int dim = 1;
  int grid = 0;
  int fibres = 1;
  std::vector<double> lo, hi;
  std::vector<double> values;

  long points() const;
  double spacing(int axis) const { return (hi[axis] - lo[axis]) / grid; }
  Vec coordinate(long k) const;
};

struct FlowTrace {
  std::vector<long> step;
  std::vector<double> time;
  std::vector<double> energy;
  std::vector<double> mode1;  // |first Fourier mode| along x1, fibre 0
  std::vector<double> mode2;
};

struct FlowResult {
  FlowTrace trace;
  SectionGrid final_grid;
  long steps = 0;
  double final_time = 0;
  double initial_energy = 0;
  double final_energy = 0;
  double initial_max_tau_v = 0;
  double final_max_tau_v = 0;
  double max_energy_increase = 0;  // largest E_{k+1} − E_k seen (≤ 0 when monotone)
  bool monotone = true;
};

/// Throws InvalidGeometry unless the space is a product with zero lift,
/// a Euclidean base metric and periodic base coordinates.
void require_flow_space(const SubmersionSpace& s);

SectionGrid sample_section(const Section& s, int grid);
/// E^v = ½ Σ_cells vol Σ_i |(σ_{k+e_i} − σ_k)/h_i|²
double vertical_energy(const SectionGrid& g);
/// Discrete τ^v: the periodic grid Laplacian of each fibre component.
std::vector<double> discrete_tension(const SectionGrid& g, int workers = 0);
/// Amplitude of Fourier mode `k` along the first base axis, fibre 0.
double mode_amplitude(const SectionGrid& g, int k);

/// Throws StepUnstable when dt·λ_max ≥ 2 or when the energy increases by
/// more than the slack in any step.
FlowResult tension_flow(SectionGrid initial, const FlowOptions& opt);
FlowResult tension_flow(const Section& s, const FlowOptions& opt);

}  // namespace harmsec
