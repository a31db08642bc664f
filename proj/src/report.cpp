#include "harmsec/report.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "harmsec/error.hpp"

#ifndef HARMSEC_VERSION
#define HARMSEC_VERSION "0.0.0"
#endif

namespace harmsec {

using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

ordered_json measured(double v) { return {{"value", v}, {"tolerance", nullptr}, {"status", "measured"}}; }

ordered_json checked(double v, double tol, bool pass) {
  return {{"value", v}, {"tolerance", tol}, {"status", pass ? "pass" : "fail"}};
}

ordered_json vec_json(const Vec& v) {
  ordered_json out = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// Residual as a checked (or, when `observe_only`, measured) quantity.
ordered_json residual_json(const Residual& r, bool observe_only = false) {
  ordered_json out = observe_only ? measured(r.max) : checked(r.max, r.tolerance, r.pass);
  if (observe_only) out["would_pass"] = r.pass;
  if (observe_only) out["min"] = measured(std::isfinite(r.min) ? r.min : 0.0);
  out["worst_point"] = vec_json(r.worst_point);
  if (!r.worst_label.empty()) out["worst_label"] = r.worst_label;
  return out;
}

ordered_json check_json(const VerificationReport& rep, bool observe_only = false) {
  ordered_json out;
  for (const auto& r : rep.residuals) out[r.name] = residual_json(r, observe_only);
  return out;
}

std::string worst_summary(const VerificationReport& rep) {
  for (const auto& r : rep.residuals)
    if (!r.pass) {
      std::ostringstream os;
      os << std::setprecision(6) << rep.check << " (" << r.name << " = " << r.max << " > " << r.tolerance << " at [";
      for (int i = 0; i < r.worst_point.size(); ++i) os << (i ? ", " : "") << r.worst_point[i];
      os << "])";
      return os.str();
    }
  return rep.check;
}

ordered_json section_json(const Section& s) {
  ordered_json comps = ordered_json::array();
  for (const auto& c : s.components()) comps.push_back(c.to_string());
  return {{"name", s.name()}, {"components", comps}};
}

ordered_json header(const char* command, const Geometry& g, const Section& s, const ordered_json& params) {
  ordered_json input;
  input["geometry"] = g.name;
  input["section"] = section_json(s);
  input["parameters"] = params;
  ordered_json digest_doc;
  digest_doc["command"] = command;
  digest_doc["geometry"] = export_geometry(g);
  digest_doc["section"] = input["section"];
  digest_doc["parameters"] = params;
  input["digest"] = "sha256:" + sha256_hex(digest_doc.dump());

  ordered_json rep;
  rep["schema"] = kReportSchema;
  rep["tool"] = "harmsec";
  rep["version"] = version_string();
  rep["command"] = command;
  rep["input"] = input;
  return rep;
}

void finish(ordered_json& rep, const std::vector<std::string>& failures, const std::vector<std::string>& warnings,
            int exit_code, bool timing, Clock::time_point start) {
  rep["verdict"]["exit_code"] = exit_code;
  rep["verdict"]["failures"] = failures;
  rep["verdict"]["warnings"] = warnings;
  if (timing)
    rep["wall_clock_seconds"] = measured(std::chrono::duration<double>(Clock::now() - start).count());
}

const char* kItemStatements[5] = {
    "tr D = 0 implies (harmonic map iff harmonic section)",
    "harmonic map implies tr C = 0 and tr D = 0",
    "tr C != 0 or tr D != 0 implies not a harmonic map",
    "harmonic section implies tr C = 0",
    "tr C != 0 implies not a harmonic section",
};

const CConvention kConventions[3] = {CConvention::Pullback, CConvention::BracketPlus, CConvention::BracketMinus};

}  // namespace

const char* version_string() { return HARMSEC_VERSION; }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "SHA-256 digest failed");
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(md[i]);
  return os.str();
}

RunOutcome run_verify(const Geometry& g, const Section& s, const VerifyOptions& opt) {
  auto start = Clock::now();
  ordered_json params{{"samples", opt.samples}, {"tolerance", opt.tolerance}, {"strict_skew", opt.strict_skew}};
  ordered_json rep = header("verify", g, s, params);
  const auto& S = s.space();
  CheckOptions co;
  co.samples = opt.samples;
  co.tolerance = opt.tolerance;
  co.workers = opt.workers;

  std::vector<std::string> failures, warnings;
  auto affine = check_affine(S, co);
  auto projectors = check_projectors(S, co);
  auto skew = check_skew(S, co);
  if (!affine.pass()) failures.push_back(worst_summary(affine));
  if (!projectors.pass()) failures.push_back(worst_summary(projectors));
  if (!skew.pass()) (opt.strict_skew ? failures : warnings).push_back(worst_summary(skew));

  SectionOptions so;
  so.samples = opt.samples;
  so.tolerance = opt.tolerance;
  so.workers = opt.workers;
  auto cls = classify(s, so);
  const double tol = opt.tolerance;

  ordered_json checks;
  checks["affine"] = check_json(affine);
  checks["projectors"] = check_json(projectors);
  checks["skew"] = check_json(skew);
  checks["skew"]["enforced"] = opt.strict_skew;

  ordered_json dec;
  dec["convention"] = cls.convention ? ordered_json(convention_name(*cls.convention)) : ordered_json(nullptr);
  for (int c = 0; c < 3; ++c)
    dec["vertical"][convention_name(kConventions[c])] = checked(cls.max_residual_v[c], tol, cls.max_residual_v[c] <= tol);
  dec["horizontal"] = checked(cls.max_residual_h, tol, cls.horizontal_ok);
  dec["pass"] = cls.decomposition_ok();
  checks["decomposition"] = dec;
  if (!cls.convention) failures.push_back("decomposition (no convention reconciles the vertical part)");
  if (!cls.horizontal_ok) failures.push_back("decomposition (horizontal part)");

  ordered_json items = ordered_json::array();
  for (int i = 0; i < 5; ++i) {
    items.push_back({{"item", i + 1}, {"statement", kItemStatements[i]}, {"status", item_status_name(cls.items[i])}});
    if (cls.items[i] == ItemStatus::Violated) failures.push_back("classification item " + std::to_string(i + 1));
  }
  checks["classification"]["tolerance"] = tol;
  checks["classification"]["items"] = items;
  rep["checked"] = checks;

  ordered_json m;
  m["harmonic_map"] = cls.harmonic_map;
  m["harmonic_section"] = cls.harmonic_section;
  m["corollary_consistent"] = cls.corollary_consistent;
  m["max_tau"] = measured(cls.max_tau);
  m["max_tau_h"] = measured(cls.max_tau_h);
  m["max_tau_v"] = measured(cls.max_tau_v);
  m["max_tau_v_literal"] = measured(cls.max_tau_v_literal);
  m["max_tau_v_off_vertical"] = measured(cls.max_tau_v_off_vertical);
  for (int c = 0; c < 3; ++c) m["max_tr_C"][convention_name(kConventions[c])] = measured(cls.max_tr_C[c]);
  m["max_tr_D"] = measured(cls.max_tr_D);
  m["max_bracket_trace"] = measured(cls.max_bracket_trace);
  m["literal_residual"]["+"] = measured(cls.max_residual_literal[0]);
  m["literal_residual"]["-"] = measured(cls.max_residual_literal[1]);
  m["literal_sign"] = cls.literal_sign > 0 ? "+" : cls.literal_sign < 0 ? "-" : "none";
  m["blumenthal"] = check_json(check_blumenthal(S, co), true);
  m["horizontal_integrability"] = check_json(check_horizontal_integrability(S, co), true);
  m["samples"] = static_cast<long>(cls.points.size());
  rep["measured"] = m;

  RunOutcome out;
  out.exit_code = failures.empty() ? 0 : 1;
  finish(rep, failures, warnings, out.exit_code, opt.timing, start);
  out.report = std::move(rep);
  return out;
}

namespace {

Covector simulation_form(const Geometry& g, const SimulateOptions& opt) {
  if (opt.form.empty()) return canonical_vertical_form(g.space, opt.fiber_index);
  std::vector<Expr> e;
  for (const auto& c : opt.form) e.push_back(parse(c));
  return covector_from_expressions(g.space->total_chart(), e);
}

ordered_json statistic_json(const Statistic& s) {
  return {{"mean", measured(s.mean)}, {"stderr", measured(s.stderr_)}, {"max_abs", measured(s.max_abs)},
          {"count", s.count}};
}

ordered_json experiment_json(const ExperimentReport& r) {
  ordered_json out;
  out["kind"] = r.kind;
  out["paths"] = r.paths;
  out["censored"] = r.censored;
  out["censored_fraction"] = measured(r.paths ? static_cast<double>(r.censored) / r.paths : 0.0);
  out["lhs"] = statistic_json(r.lhs_stat);
  out["rhs"] = statistic_json(r.rhs_stat);
  out["difference"] = statistic_json(r.difference_stat);
  out["literal_difference"] = statistic_json(r.literal_stat);
  out["trace_c_integral"] = statistic_json(summarize(r.trace_c_integral));
  // Pathwise equality is an observation; it never decides the exit code.
  out["pathwise"] = {{"value", r.difference_stat.max_abs}, {"tolerance", r.tolerance}, {"status", "measured"},
                     {"holds", r.pathwise()}};
  return out;
}

}  // namespace

RunOutcome run_simulate(const Geometry& g, const Section& s, const SimulateOptions& opt) {
  auto start = Clock::now();
  ordered_json params{{"horizon", opt.horizon}, {"dt", opt.dt},     {"paths", opt.paths},
                      {"seed", opt.seed},       {"form", nullptr}, {"x0", nullptr},
                      {"tolerance", opt.tolerance}};
  if (opt.form.empty())
    params["form"] = "canonical:" + g.space->total_chart().names()[g.space->n() + opt.fiber_index];
  else
    params["form"] = opt.form;
  if (opt.x0) params["x0"] = *opt.x0;
  ordered_json rep = header("simulate", g, s, params);

  Covector theta = simulation_form(g, opt);
  ExperimentOptions eo;
  eo.brownian.horizon = opt.horizon;
  eo.brownian.dt = opt.dt;
  eo.brownian.paths = opt.paths;
  eo.brownian.seed = opt.seed;
  eo.brownian.workers = opt.workers;
  eo.tolerance = opt.tolerance;
  if (opt.x0) {
    if (static_cast<int>(opt.x0->size()) != g.space->n())
      throw Error(ErrorCode::InvalidArgument, "x0 must have one entry per base coordinate");
    eo.x0 = Eigen::Map<const Vec>(opt.x0->data(), static_cast<Eigen::Index>(opt.x0->size()));
  }
  auto [sff, ten] = path_experiments(s, theta, eo);
  rep["checked"] = ordered_json::object();
  rep["measured"]["second_fundamental_form"] = experiment_json(sff);
  rep["measured"]["tension"] = experiment_json(ten);

  RunOutcome out;
  finish(rep, {}, {}, 0, opt.timing, start);
  out.report = std::move(rep);
  return out;
}

RunOutcome run_flow(const Geometry& g, const Section& s, const FlowRunOptions& opt) {
  auto start = Clock::now();
  const auto& f = opt.flow;
  ordered_json params{{"grid", f.grid},
                      {"dt", f.dt},
                      {"steps", f.steps},
                      {"record_every", f.record_every},
                      {"energy_slack", f.energy_slack}};
  ordered_json rep = header("flow", g, s, params);
  require_flow_space(s.space());

  RunOutcome out;
  std::vector<std::string> failures;
  try {
    auto r = tension_flow(s, f);
    ordered_json checks;
    checks["energy_monotone"] = checked(std::max(0.0, r.max_energy_increase), f.energy_slack, r.monotone);
    rep["checked"] = checks;
    ordered_json m;
    m["steps"] = r.steps;
    m["final_time"] = measured(r.final_time);
    m["initial_energy"] = measured(r.initial_energy);
    m["final_energy"] = measured(r.final_energy);
    m["initial_max_tau_v"] = measured(r.initial_max_tau_v);
    m["final_max_tau_v"] = measured(r.final_max_tau_v);
    ordered_json trace = ordered_json::array();
    for (std::size_t i = 0; i < r.trace.step.size(); ++i)
      trace.push_back({{"step", r.trace.step[i]},
                       {"time", r.trace.time[i]},
                       {"energy", measured(r.trace.energy[i])},
                       {"mode1", measured(r.trace.mode1[i])},
                       {"mode2", measured(r.trace.mode2[i])}});
    m["trace"] = trace;
    rep["measured"] = m;
    if (!r.monotone) failures.push_back("energy_monotone");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::StepUnstable) throw;
    rep["checked"]["stable"] = {{"value", nullptr}, {"tolerance", nullptr}, {"status", "fail"}};
    rep["measured"] = ordered_json::object();
    failures.push_back(std::string("StepUnstable: ") + e.what());
  }
  out.exit_code = failures.empty() ? 0 : 1;
  finish(rep, failures, {}, out.exit_code, opt.timing, start);
  out.report = std::move(rep);
  return out;
}

std::string diagnostics_csv(const Section& s, const VerifyOptions& opt) {
  SectionOptions so;
  so.samples = opt.samples;
  so.tolerance = opt.tolerance;
  so.workers = opt.workers;
  auto cls = decomposition_check(s, so);
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& n : s.space().base_chart().names()) os << n << ',';
  os << "tau,tau_v,tau_v_literal,tr_C_pullback,tr_C_bracket_plus,tr_C_bracket_minus,tr_D,bracket_trace,"
        "residual_v_pullback,residual_v_bracket_plus,residual_v_bracket_minus,residual_h\n";
  for (const auto& p : cls.points) {
    for (int i = 0; i < p.x.size(); ++i) os << p.x[i] << ',';
    os << p.tau.total().norm() << ',' << p.tau_v.norm() << ',' << p.tau_v_literal.norm();
    for (int c = 0; c < 3; ++c) os << ',' << p.tr_C[c].norm();
    os << ',' << p.tr_D.norm() << ',' << p.bracket_trace.norm();
    for (int c = 0; c < 3; ++c) os << ',' << p.residual_v[c];
    os << ',' << p.residual_h << '\n';
  }
  return os.str();
}

std::string paths_csv(const Geometry& g, const SimulateOptions& opt) {
  BrownianOptions bo;
  bo.horizon = opt.horizon;
  bo.dt = opt.dt;
  bo.paths = opt.paths;
  bo.seed = opt.seed;
  bo.workers = opt.workers;
  Vec x0 = g.space->base_chart().center();
  if (opt.x0) x0 = Eigen::Map<const Vec>(opt.x0->data(), static_cast<Eigen::Index>(opt.x0->size()));
  std::ostringstream os;
  write_paths_csv(os, g.space->base_chart(), brownian_paths(g.space->base_metric(), x0, bo));
  return os.str();
}

std::string dump_report(const ordered_json& report) { return report.dump(2) + "\n"; }

}  // namespace harmsec
