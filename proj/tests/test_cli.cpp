#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("harmsec_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result cli(const std::vector<std::string>& args, const std::string& env = "") {
  std::string cmd = env.empty() ? "unset HARMSEC_SEED; " : env + " ";
  cmd += quote(HARMSEC_CLI);
  for (const auto& a : args) cmd += " " + quote(a);
  auto err = scratch() / "stderr.txt";
  cmd += " 2>" + quote(err.string());
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, slurp(err)};
}

}  // namespace

TEST_CASE("list") {
  auto r = cli({"list"});
  CHECK(r.code == 0);
  for (const char* name : {"product", "tangent_bundle_flat", "hopf", "blumenthal_flat"})
    CHECK(r.out.find(std::string(name) + "\t") != std::string::npos);
  CHECK(r.out.find("product_s1") == std::string::npos);
  auto v = cli({"list", "--verbose"});
  CHECK(v.code == 0);
  auto doc = json::parse(v.out);
  CHECK(doc.size() == 4);
  CHECK(doc[0]["expectations"].size() >= 1);
  CHECK(cli({"--version"}).out.find("0.1.0") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"verify", "product"}).code == 2);
  CHECK(cli({"verify", "product", "-s", "0", "--samples", "-3"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  auto r = cli({"verify", "klein_bottle", "-s", "0"});
  CHECK(r.code == 2);
  CHECK(r.err.find("UnknownGalleryName") != std::string::npos);
  CHECK(cli({"verify", "product", "-s", "sin(z)"}).code == 2);
  CHECK(cli({"verify", "product", "-s", "no_such_section"}).code == 2);
  CHECK(cli({"simulate", "hopf", "-s", "cos_theta", "--form", "1;0;0", "--paths", "3"}).code == 2);
  CHECK(cli({"simulate", "product", "-s", "0", "--dt", "0.3", "--paths", "3"}).code == 2);
  CHECK(cli({"simulate", "product", "-s", "0", "--paths", "3"}, "HARMSEC_SEED=abc").code == 2);
}

TEST_CASE("verify classifies the product examples") {
  auto z = cli({"verify", "product", "-s", "0"});
  CHECK(z.code == 0);
  auto zd = json::parse(z.out);
  CHECK(zd["measured"]["harmonic_map"] == true);
  CHECK(zd["measured"]["harmonic_section"] == true);
  auto s = cli({"verify", "product", "-s", "sin(x1)"});
  CHECK(s.code == 0);
  auto sd = json::parse(s.out);
  CHECK(sd["measured"]["harmonic_map"] == false);
  CHECK(sd["measured"]["harmonic_section"] == false);
  CHECK(s.err.rfind("verify: ok", 0) == 0);
}

TEST_CASE("broken files fail with 1 and name the check") {
  auto file = scratch() / "broken_product.json";
  auto e = cli({"export", "product", "--broken", "0.1", "-o", file.string()});
  REQUIRE(e.code == 0);
  auto r = cli({"verify", file.string(), "-s", "constant"});
  CHECK(r.code == 1);
  CHECK(r.err.find("affine") != std::string::npos);

  auto h = cli({"verify", "hopf", "--broken", "0.1", "-s", "constant"});
  CHECK(h.err.find("warning") != std::string::npos);
  CHECK(h.err.find("skew") != std::string::npos);
  CHECK(cli({"verify", "hopf", "--broken", "0.1", "-s", "constant", "--strict-skew"}).code == 1);

  auto bad = scratch() / "bad.json";
  auto doc = json::parse(cli({"export", "product"}).out);
  doc["base"]["metric"][1][0] = "x1 +";
  std::ofstream(bad) << doc.dump();
  auto b = cli({"verify", bad.string(), "-s", "0"});
  CHECK(b.code == 2);
  CHECK(b.err.find("/base/metric/1/0") != std::string::npos);
}

TEST_CASE("export round-trip gives the same verdict") {
  for (const char* name : {"product", "tangent_bundle_flat", "hopf", "blumenthal_flat", "product_s1"}) {
    CAPTURE(name);
    auto file = scratch() / (std::string(name) + ".json");
    auto e = cli({"export", name});
    REQUIRE(e.code == 0);
    std::ofstream(file) << e.out;
    CHECK(cli({"export", file.string()}).out == e.out);
    auto a = cli({"verify", name, "-s", "constant", "--samples", "16"});
    auto b = cli({"verify", file.string(), "-s", "constant", "--samples", "16"});
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("simulate is byte-stable and honours the seed") {
  std::vector<std::string> args{"simulate", "product", "-s", "sin(x1)", "--paths", "2000", "--seed", "7"};
  auto a = cli(args);
  auto args3 = args;
  args3.insert(args3.end(), {"--workers", "3"});
  auto b = cli(args3);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  auto doc = json::parse(a.out);
  CHECK(doc["input"]["parameters"]["seed"] == 7);
  CHECK(doc["measured"]["second_fundamental_form"]["pathwise"]["holds"] == true);

  auto env = cli({"simulate", "product", "-s", "sin(x1)", "--paths", "20"}, "HARMSEC_SEED=11");
  CHECK(json::parse(env.out)["input"]["parameters"]["seed"] == 11);
  auto dflt = cli({"simulate", "product", "-s", "sin(x1)", "--paths", "20"});
  CHECK(json::parse(dflt.out)["input"]["parameters"]["seed"] == 1);
  auto over = cli({"simulate", "product", "-s", "sin(x1)", "--paths", "20", "--seed", "4"}, "HARMSEC_SEED=11");
  CHECK(json::parse(over.out)["input"]["parameters"]["seed"] == 4);

  auto h = cli({"simulate", "hopf", "-s", "cos_theta", "--paths", "300", "--seed", "3"});
  CHECK(h.code == 0);
  auto t = cli({"simulate", "hopf", "-s", "cos_theta", "--paths", "300", "--seed", "3", "--timing"});
  CHECK(json::parse(t.out).contains("wall_clock_seconds"));
  CHECK_FALSE(json::parse(h.out).contains("wall_clock_seconds"));

  auto csv = scratch() / "paths.csv";
  auto json_file = scratch() / "report.json";
  auto c = cli({"simulate", "product", "-s", "0", "--paths", "2", "--T", "0.05", "--csv", csv.string(), "--json",
                json_file.string()});
  CHECK(c.code == 0);
  CHECK(c.out.empty());
  CHECK(json::parse(slurp(json_file))["command"] == "simulate");
  auto rows = slurp(csv);
  CHECK(rows.rfind("path,t,x1,x2\n", 0) == 0);
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 1 + 2 * 6);
}

TEST_CASE("flow") {
  auto r = cli({"flow", "-s", "sin(x1)"});
  REQUIRE(r.code == 0);
  auto doc = json::parse(r.out);
  CHECK(doc["checked"]["energy_monotone"]["status"] == "pass");
  CHECK(doc["measured"]["final_max_tau_v"]["value"].get<double>() < 1e-6);
  CHECK(cli({"flow", "-s", "sin(x1)", "--dt", "10", "--steps", "5"}).code == 1);
  CHECK(cli({"flow", "hopf", "-s", "cos_theta", "--steps", "5"}).code == 2);
}
