#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <memory>
#include <string>

#include "harmsec/harmsec.h"

using nlohmann::json;

namespace {

struct Space {
  hs_space* p = nullptr;
  ~Space() { hs_space_free(p); }
};
struct Sec {
  hs_section* p = nullptr;
  ~Sec() { hs_section_free(p); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  hs_string_free(s);
  return out;
}

struct Run {
  hs_status status;
  std::string report;
  int exit_code;
};

Run verify(const hs_section* s, const std::string& opts = "") {
  char* out = nullptr;
  int code = -1;
  hs_status st = hs_verify(s, opts.c_str(), &out, &code);
  return {st, take(out), code};
}

Run simulate(const hs_section* s, const std::string& opts) {
  char* out = nullptr;
  int code = -1;
  hs_status st = hs_simulate(s, opts.c_str(), &out, &code);
  return {st, take(out), code};
}

Run flow(const hs_section* s, const std::string& opts) {
  char* out = nullptr;
  int code = -1;
  hs_status st = hs_flow(s, opts.c_str(), &out, &code);
  return {st, take(out), code};
}

std::string export_json(const hs_space* s) {
  char* out = nullptr;
  REQUIRE(hs_space_export_json(s, &out) == HS_OK);
  return take(out);
}

}  // namespace

TEST_CASE("version and gallery listing") {
  CHECK(std::string(hs_version()) == "0.1.0");
  CHECK(hs_gallery_count() == 5);
  CHECK(std::string(hs_gallery_name(0)) == "product");
  CHECK(hs_gallery_name(99) == nullptr);
  char* out = nullptr;
  REQUIRE(hs_gallery_list_json(0, 0, &out) == HS_OK);
  auto list = json::parse(take(out));
  CHECK(list.size() == 4);
  REQUIRE(hs_gallery_list_json(1, 1, &out) == HS_OK);
  auto full = json::parse(take(out));
  CHECK(full.size() == 5);
  for (const auto& e : full) CHECK_FALSE(e["expectations"].empty());
}

TEST_CASE("errors carry a status and a message") {
  Space s;
  CHECK(hs_space_from_gallery("klein_bottle", 0, &s.p) == HS_UNKNOWN_GALLERY_NAME);
  CHECK(std::string(hs_last_error()).find("klein_bottle") != std::string::npos);
  CHECK(std::string(hs_status_name(HS_UNKNOWN_GALLERY_NAME)) == "UnknownGalleryName");
  CHECK(hs_space_from_gallery(nullptr, 0, &s.p) == HS_INVALID_ARGUMENT);
  CHECK(hs_space_from_file("/nonexistent/geometry.json", &s.p) == HS_IO);
  CHECK(hs_space_from_json("{not json", &s.p) == HS_INVALID_GEOMETRY);

  REQUIRE(hs_space_from_gallery("product", 0, &s.p) == HS_OK);
  CHECK(std::string(hs_last_error()).empty());
  Sec sec;
  CHECK(hs_section_create(s.p, "sin(x1", &sec.p) == HS_SYNTAX);
  CHECK(hs_section_create(s.p, "sin(q)", &sec.p) == HS_UNBOUND_VARIABLE);
  CHECK(hs_section_create(s.p, "sin(x1); 1", &sec.p) == HS_INVALID_GEOMETRY);
  REQUIRE(hs_section_create(s.p, "sine", &sec.p) == HS_OK);
  CHECK(verify(sec.p, "{\"samples\": 0}").status == HS_INVALID_ARGUMENT);
  CHECK(verify(sec.p, "{\"unknown_key\": 1}").status == HS_INVALID_ARGUMENT);
  CHECK(verify(sec.p, "[1, 2]").status == HS_INVALID_ARGUMENT);
}

TEST_CASE("geometry file diagnostics name the field") {
  Space s;
  REQUIRE(hs_space_from_gallery("product", 0, &s.p) == HS_OK);
  auto doc = json::parse(export_json(s.p));

  auto bad = doc;
  bad["base"]["metric"][0][0] = "1 + y";
  Space t;
  CHECK(hs_space_from_json(bad.dump().c_str(), &t.p) == HS_INVALID_GEOMETRY);
  CHECK(std::string(hs_last_error()).find("/base/metric/0/0") != std::string::npos);

  bad = doc;
  bad["lift"][0].erase(1);
  CHECK(hs_space_from_json(bad.dump().c_str(), &t.p) == HS_INVALID_GEOMETRY);
  CHECK(std::string(hs_last_error()).find("/lift/0") != std::string::npos);

  bad = doc;
  bad["connection"] = "bogus";
  CHECK(hs_space_from_json(bad.dump().c_str(), &t.p) == HS_INVALID_GEOMETRY);
  CHECK(std::string(hs_last_error()).find("/connection") != std::string::npos);

  bad = doc;
  bad["schema"] = "something-else/2";
  CHECK(hs_space_from_json(bad.dump().c_str(), &t.p) == HS_INVALID_GEOMETRY);

  bad = doc;
  bad["sections"][1]["components"][0] = "sin(";
  CHECK(hs_space_from_json(bad.dump().c_str(), &t.p) == HS_SYNTAX);
  CHECK(std::string(hs_last_error()).find("/sections/1/components/0") != std::string::npos);

  bad = doc;
  bad["base"]["metric"] = json::array({json::array({"1", "0"}), json::array({"0", "-1"})});
  CHECK(hs_space_from_json(bad.dump().c_str(), &t.p) == HS_SINGULAR_METRIC);

  bad = doc;
  bad["connection"] = {{"table", json::array()}};
  CHECK(hs_space_from_json(bad.dump().c_str(), &t.p) == HS_INVALID_GEOMETRY);
}

TEST_CASE("export round-trip reproduces reports") {
  for (std::size_t i = 0; i < hs_gallery_count(); ++i) {
    for (double eps : {0.0, 0.1}) {
      std::string name = hs_gallery_name(i);
      CAPTURE(name);
      CAPTURE(eps);
      Space a, b;
      REQUIRE(hs_space_from_gallery(name.c_str(), eps, &a.p) == HS_OK);
      std::string text = export_json(a.p);
      REQUIRE(hs_space_from_json(text.c_str(), &b.p) == HS_OK);
      CHECK(export_json(b.p) == text);
      Sec sa, sb;
      REQUIRE(hs_section_create(a.p, "constant", &sa.p) == HS_OK);
      REQUIRE(hs_section_create(b.p, "constant", &sb.p) == HS_OK);
      CHECK(verify(sa.p, "{\"samples\": 16}").report == verify(sb.p, "{\"samples\": 16}").report);
    }
  }
}

TEST_CASE("exit codes over the gallery, clean and broken") {
  for (std::size_t i = 0; i < hs_gallery_count(); ++i) {
    std::string name = hs_gallery_name(i);
    CAPTURE(name);
    Space clean, broken;
    REQUIRE(hs_space_from_gallery(name.c_str(), 0, &clean.p) == HS_OK);
    REQUIRE(hs_space_from_gallery(name.c_str(), 0.1, &broken.p) == HS_OK);
    auto sections = json::parse(export_json(clean.p))["sections"];
    for (const auto& ns : sections) {
      std::string sname = ns["name"];
      CAPTURE(sname);
      Sec s;
      REQUIRE(hs_section_create(clean.p, sname.c_str(), &s.p) == HS_OK);
      auto r = verify(s.p, "{\"samples\": 24}");
      REQUIRE(r.status == HS_OK);
      CHECK(r.exit_code == 0);
      auto rep = json::parse(r.report);
      CHECK(rep["verdict"]["failures"].empty());
      CHECK(rep["verdict"]["warnings"].empty());
    }
    Sec b;
    REQUIRE(hs_section_create(broken.p, "constant", &b.p) == HS_OK);
    auto soft = verify(b.p, "{\"samples\": 24}");
    auto strict = verify(b.p, "{\"samples\": 24, \"strict_skew\": true}");
    CHECK(strict.exit_code == 1);
    auto rep = json::parse(soft.report);
    if (name == "hopf" || name == "blumenthal_flat") {
      CHECK(rep["checked"]["skew"]["skew"]["status"] == "fail");
      CHECK(rep["checked"]["affine"]["affine"]["status"] == "pass");
      CHECK_FALSE(rep["verdict"]["warnings"].empty());
    } else {
      CHECK(soft.exit_code == 1);
      CHECK(rep["checked"]["affine"]["affine"]["status"] == "fail");
      CHECK(rep["checked"]["affine"]["affine"]["value"].get<double>() >= 1e-2);
    }
  }
}

TEST_CASE("reports separate checked and measured values") {
  Space s;
  REQUIRE(hs_space_from_gallery("product", 0, &s.p) == HS_OK);
  Sec zero, sine;
  REQUIRE(hs_section_create(s.p, "0", &zero.p) == HS_OK);
  REQUIRE(hs_section_create(s.p, "sin(x1)", &sine.p) == HS_OK);
  auto z = json::parse(verify(zero.p).report);
  CHECK(z["schema"] == "harmsec-report/1");
  CHECK(z["input"]["digest"].get<std::string>().rfind("sha256:", 0) == 0);
  CHECK(z["input"]["digest"].get<std::string>().size() == 7 + 64);
  CHECK(z["measured"]["harmonic_map"] == true);
  CHECK(z["measured"]["harmonic_section"] == true);
  CHECK_FALSE(z.contains("wall_clock_seconds"));
  auto w = json::parse(verify(sine.p).report);
  CHECK(w["measured"]["harmonic_map"] == false);
  CHECK(w["measured"]["harmonic_section"] == false);
  CHECK(w["checked"]["decomposition"]["convention"] == "pullback");
  CHECK(w["measured"]["max_tau_v"]["status"] == "measured");
  CHECK(w["measured"]["max_tau_v"]["tolerance"].is_null());
  CHECK(w["checked"]["affine"]["affine"]["tolerance"] == 1e-8);
  CHECK(z["input"]["digest"] != w["input"]["digest"]);
  auto timed = json::parse(verify(sine.p, "{\"timing\": true}").report);
  CHECK(timed.contains("wall_clock_seconds"));
}

TEST_CASE("tension through the C interface") {
  Space s;
  REQUIRE(hs_space_from_gallery("product_s1", 0, &s.p) == HS_OK);
  int n = 0, r = 0;
  REQUIRE(hs_space_dims(s.p, &n, &r) == HS_OK);
  CHECK(n == 1);
  CHECK(r == 1);
  Sec sec;
  REQUIRE(hs_section_create(s.p, "sin(x1)", &sec.p) == HS_OK);
  double x = 0.7, tau[2], tau_v[2];
  REQUIRE(hs_tension(sec.p, &x, tau, tau_v) == HS_OK);
  CHECK(std::abs(tau[0]) < 1e-14);
  CHECK(tau[1] == doctest::Approx(-std::sin(0.7)).epsilon(1e-13));
  CHECK(tau_v[1] == doctest::Approx(-std::sin(0.7)).epsilon(1e-13));
}

TEST_CASE("simulate and flow") {
  Space prod, hopf;
  REQUIRE(hs_space_from_gallery("product", 0, &prod.p) == HS_OK);
  REQUIRE(hs_space_from_gallery("hopf", 0, &hopf.p) == HS_OK);
  Sec sine, h;
  REQUIRE(hs_section_create(prod.p, "sin(x1)", &sine.p) == HS_OK);
  REQUIRE(hs_section_create(hopf.p, "cos_theta", &h.p) == HS_OK);

  auto a = simulate(sine.p, "{\"paths\": 60, \"seed\": 7, \"workers\": 1}");
  auto b = simulate(sine.p, "{\"paths\": 60, \"seed\": 7, \"workers\": 3}");
  REQUIRE(a.status == HS_OK);
  CHECK(a.exit_code == 0);
  CHECK(a.report == b.report);
  auto rep = json::parse(a.report);
  CHECK(rep["measured"]["second_fundamental_form"]["pathwise"]["holds"] == true);
  CHECK(rep["measured"]["tension"]["difference"]["max_abs"]["value"].get<double>() <= 1e-10);
  CHECK(rep["input"]["parameters"]["seed"] == 7);
  auto c = simulate(sine.p, "{\"paths\": 60, \"seed\": 8}");
  CHECK(c.report != a.report);

  auto hs = simulate(h.p, "{\"paths\": 20, \"horizon\": 0.2}");
  CHECK(hs.status == HS_OK);
  CHECK(hs.exit_code == 0);
  CHECK(simulate(h.p, "{\"paths\": 5, \"form\": [\"1\", \"0\", \"0\"]}").status == HS_NON_VERTICAL_FORM);
  CHECK(simulate(h.p, "{\"paths\": 5, \"dt\": 0.3}").status == HS_INVALID_HORIZON);

  char* csv = nullptr;
  REQUIRE(hs_paths_csv(sine.p, "{\"paths\": 2, \"horizon\": 0.02}", &csv) == HS_OK);
  CHECK(take(csv).rfind("path,t,x1,x2\n", 0) == 0);
  REQUIRE(hs_diagnostics_csv(sine.p, "{\"samples\": 4}", &csv) == HS_OK);
  auto diag = take(csv);
  CHECK(std::count(diag.begin(), diag.end(), '\n') == 5);

  Space s1;
  REQUIRE(hs_space_from_gallery("product_s1", 0, &s1.p) == HS_OK);
  Sec fs, fz;
  REQUIRE(hs_section_create(s1.p, "sin(x1)", &fs.p) == HS_OK);
  REQUIRE(hs_section_create(s1.p, "0", &fz.p) == HS_OK);
  auto unstable = flow(fs.p, "{\"dt\": 10, \"steps\": 3}");
  CHECK(unstable.status == HS_OK);
  CHECK(unstable.exit_code == 1);
  auto fixed = json::parse(flow(fz.p, "{\"steps\": 50}").report);
  CHECK(fixed["measured"]["final_max_tau_v"]["value"] == 0.0);
  CHECK(fixed["checked"]["energy_monotone"]["status"] == "pass");
  CHECK(flow(h.p, "{\"steps\": 5}").status == HS_INVALID_GEOMETRY);
}
