#pragma once

// Run reports (JSON, schema "harmsec-report/1").
//
// Every numeric result is an object {"value", "tolerance", "status"} with
// status "pass", "fail" or "measured". Results that decide the exit code sit
// under "checked"; quantities that are only observed sit under "measured".
// Reports are byte-stable for identical inputs, seed and options, whatever
// the worker count, unless timing is requested.

#include <cstdint>
#include <json.hpp>
#include <string>

#include "harmsec/flow.hpp"
#include "harmsec/io.hpp"
#include "harmsec/stochastic.hpp"

namespace harmsec {

inline constexpr const char* kReportSchema = "harmsec-report/1";

const char* version_string();

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

struct VerifyOptions {
  int samples = 64;
  double tolerance = 1e-8;
  bool strict_skew = false;
  int workers = 0;
  bool timing = false;
};

struct SimulateOptions {
  double horizon = 1.0;
  double dt = 1e-2;
  long paths = 1000;
  std::uint64_t seed = 1;
  int workers = 0;
  int fiber_index = 0;             // canonical vertical form θ^α
  std::vector<std::string> form;  // explicit form components over the total chart, if given
  std::optional<std::vector<double>> x0;
  double tolerance = 1e-10;
  bool timing = false;
};

struct FlowRunOptions {
  FlowOptions flow;
  bool timing = false;
};

struct RunOutcome {
  nlohmann::ordered_json report;
  int exit_code = 0;  // 0 ok, 1 check failure
};

/// Hard checks: affine, projectors, decomposition under some convention,
/// no violated classification item; skew too when strict_skew.
RunOutcome run_verify(const Geometry& g, const Section& s, const VerifyOptions& opt);
/// Both path experiments; measured only. Throws NonVerticalForm.
RunOutcome run_simulate(const Geometry& g, const Section& s, const SimulateOptions& opt);
/// Tension flow; exit 1 on StepUnstable or a non-monotone energy trace.
/// Throws InvalidGeometry when the space is not a flat product over a torus.
RunOutcome run_flow(const Geometry& g, const Section& s, const FlowRunOptions& opt);

/// Per-sample diagnostics as CSV, one row per sample point.
std::string diagnostics_csv(const Section& s, const VerifyOptions& opt);
/// Base-space Brownian paths used by run_simulate, as CSV.
std::string paths_csv(const Geometry& g, const SimulateOptions& opt);

/// Writes a report with 2-space indentation and a trailing newline.
std::string dump_report(const nlohmann::ordered_json& report);

}  // namespace harmsec
