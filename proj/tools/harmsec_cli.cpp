// harmsec command-line tool: list, verify, simulate, flow, export.
//
// Exit codes: 0 success, 1 a hard check failed, 2 bad input.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <string>
#include <sys/stat.h>

#include "harmsec/harmsec.h"

namespace {

struct InputError {
  std::string message;
};

void check(hs_status s) {
  if (s != HS_OK) throw InputError{std::string(hs_status_name(s)) + ": " + hs_last_error()};
}

struct SpaceDeleter {
  void operator()(hs_space* s) const { hs_space_free(s); }
};
struct SectionDeleter {
  void operator()(hs_section* s) const { hs_section_free(s); }
};
struct StringDeleter {
  void operator()(char* s) const { hs_string_free(s); }
};
using SpacePtr = std::unique_ptr<hs_space, SpaceDeleter>;
using SectionPtr = std::unique_ptr<hs_section, SectionDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

bool is_file(const std::string& p) {
  struct stat st;
  return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode);
}

SpacePtr load_space(const std::string& geometry, double broken) {
  hs_space* s = nullptr;
  if (is_file(geometry)) {
    if (broken != 0) throw InputError{"--broken applies to gallery names only"};
    check(hs_space_from_file(geometry.c_str(), &s));
  } else {
    check(hs_space_from_gallery(geometry.c_str(), broken, &s));
  }
  return SpacePtr(s);
}

SectionPtr load_section(const hs_space* space, const std::string& selector) {
  hs_section* s = nullptr;
  check(hs_section_create(space, selector.c_str(), &s));
  return SectionPtr(s);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError{"cannot write '" + path + "'"};
  out << text;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("HARMSEC_SEED");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    auto v = std::stoull(env, &used);
    if (used != std::strlen(env)) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw InputError{std::string("HARMSEC_SEED is not an unsigned integer: '") + env + "'"};
  }
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw InputError{"not a number in point: '" + part + "'"};
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) out.push_back(part);
  return out;
}

// Prints the report and a one-line verdict; returns the run's exit code.
int emit(char* raw, int exit_code, const std::string& json_path) {
  StringPtr report(raw);
  write_text(json_path, report.get());
  auto doc = nlohmann::json::parse(report.get());
  const auto& v = doc["verdict"];
  std::cerr << doc["command"].get<std::string>() << ": " << (exit_code == 0 ? "ok" : "FAILED");
  for (const auto& f : v["failures"]) std::cerr << "\n  failure: " << f.get<std::string>();
  for (const auto& w : v["warnings"]) std::cerr << "\n  warning: " << w.get<std::string>();
  std::cerr << "\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harmonic sections of submersions: verification, path experiments and tension flow"};
  app.set_version_flag("--version", std::string(hs_version()));
  app.require_subcommand(1);
  app.fallthrough();

  int workers = 0;
  app.add_option("--workers", workers, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  bool timing = false;
  app.add_flag("--timing", timing, "add wall-clock time to reports (breaks byte-stability)");

  auto* list = app.add_subcommand("list", "list the gallery");
  bool verbose = false, all = false;
  list->add_flag("-v,--verbose", verbose, "include expectations and sections");
  list->add_flag("--all", all, "include unlisted helper entries");

  std::string geometry, section, json_path, csv_path;
  double broken = 0;

  auto* verify = app.add_subcommand("verify", "check the submersion and classify a section");
  int samples = 64;
  double tol = 1e-8;
  bool strict_skew = false;
  verify->add_option("geometry", geometry, "gallery name or geometry file")->required();
  verify->add_option("-s,--section", section, "section name or ';'-separated components")->required();
  verify->add_option("--tol", tol, "tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--samples", samples, "sample points")->check(CLI::PositiveNumber);
  verify->add_option("--json", json_path, "write the report here instead of stdout");
  verify->add_option("--csv", csv_path, "write per-sample diagnostics here");
  verify->add_flag("--strict-skew", strict_skew, "treat a skew-condition failure as a hard failure");
  verify->add_option("--broken", broken, "perturb one connection coefficient of a gallery entry");

  auto* simulate = app.add_subcommand("simulate", "Brownian path experiments for a section");
  long paths = 1000;
  double dt = 1e-2, horizon = 1.0;
  std::optional<std::uint64_t> seed;
  int fiber_index = 0;
  std::string form, x0;
  simulate->add_option("geometry", geometry, "gallery name or geometry file")->required();
  simulate->add_option("-s,--section", section, "section name or ';'-separated components")->required();
  simulate->add_option("--paths", paths, "number of paths")->check(CLI::PositiveNumber);
  simulate->add_option("--dt", dt, "time step")->check(CLI::PositiveNumber);
  simulate->add_option("--T", horizon, "horizon")->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", seed, "seed (default $HARMSEC_SEED or 1)");
  simulate->add_option("--fiber-index", fiber_index, "use the canonical vertical form of this fibre coordinate");
  simulate->add_option("--form", form, "';'-separated form components over the total chart");
  simulate->add_option("--x0", x0, "';'-separated starting point on the base");
  simulate->add_option("--json", json_path, "write the report here instead of stdout");
  simulate->add_option("--csv", csv_path, "write the simulated base paths here");
  simulate->add_option("--broken", broken, "perturb one connection coefficient of a gallery entry");

  auto* flow = app.add_subcommand("flow", "vertical tension flow on a flat product over a torus");
  long steps = 100000, record_every = 100;
  int grid = 128;
  double flow_dt = 1e-3;
  flow->add_option("geometry", geometry, "gallery name or geometry file")->default_val("product_s1");
  flow->add_option("-s,--section", section, "section name or ';'-separated components")->required();
  flow->add_option("--steps", steps, "time steps")->check(CLI::NonNegativeNumber);
  flow->add_option("--dt", flow_dt, "time step")->check(CLI::PositiveNumber);
  flow->add_option("--grid", grid, "grid points per base direction")->check(CLI::Range(4, 1 << 16));
  flow->add_option("--record-every", record_every, "trace sampling interval")->check(CLI::PositiveNumber);
  flow->add_option("--json", json_path, "write the report here instead of stdout");

  auto* exp = app.add_subcommand("export", "write a geometry file");
  std::string out_path;
  exp->add_option("geometry", geometry, "gallery name or geometry file")->required();
  exp->add_option("-o,--output", out_path, "output file (default stdout)");
  exp->add_option("--broken", broken, "perturb one connection coefficient of a gallery entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) {
      char* out = nullptr;
      if (verbose) {
        check(hs_gallery_list_json(1, all, &out));
        write_text("", StringPtr(out).get());
        return 0;
      }
      check(hs_gallery_list_json(0, all, &out));
      StringPtr holder(out);
      for (const auto& e : nlohmann::json::parse(holder.get()))
        std::cout << e["name"].get<std::string>() << "\t" << e["description"].get<std::string>() << "\n    "
                  << e["source"].get<std::string>() << "\n";
      return 0;
    }

    SpacePtr space = load_space(geometry, broken);

    if (exp->parsed()) {
      char* out = nullptr;
      check(hs_space_export_json(space.get(), &out));
      write_text(out_path, StringPtr(out).get());
      return 0;
    }

    SectionPtr sec = load_section(space.get(), section);
    nlohmann::json opts;
    opts["workers"] = workers;
    opts["timing"] = timing;
    char* report = nullptr;
    int exit_code = 0;

    if (verify->parsed()) {
      opts["samples"] = samples;
      opts["tolerance"] = tol;
      opts["strict_skew"] = strict_skew;
      std::string o = opts.dump();
      check(hs_verify(sec.get(), o.c_str(), &report, &exit_code));
      if (!csv_path.empty()) {
        nlohmann::json csv_opts{{"samples", samples}, {"tolerance", tol}, {"workers", workers}};
        char* csv = nullptr;
        check(hs_diagnostics_csv(sec.get(), csv_opts.dump().c_str(), &csv));
        write_text(csv_path, StringPtr(csv).get());
      }
      return emit(report, exit_code, json_path);
    }

    if (simulate->parsed()) {
      opts["paths"] = paths;
      opts["dt"] = dt;
      opts["horizon"] = horizon;
      opts["seed"] = seed ? *seed : default_seed();
      opts["fiber_index"] = fiber_index;
      if (!form.empty()) opts["form"] = split(form);
      if (!x0.empty()) opts["x0"] = parse_point(x0);
      std::string o = opts.dump();
      check(hs_simulate(sec.get(), o.c_str(), &report, &exit_code));
      if (!csv_path.empty()) {
        opts.erase("timing");
        char* csv = nullptr;
        check(hs_paths_csv(sec.get(), opts.dump().c_str(), &csv));
        write_text(csv_path, StringPtr(csv).get());
      }
      return emit(report, exit_code, json_path);
    }

    if (flow->parsed()) {
      opts["steps"] = steps;
      opts["dt"] = flow_dt;
      opts["grid"] = grid;
      opts["record_every"] = record_every;
      std::string o = opts.dump();
      check(hs_flow(sec.get(), o.c_str(), &report, &exit_code));
      return emit(report, exit_code, json_path);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 2;
  }
  return 2;
}
