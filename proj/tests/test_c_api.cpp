#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "semilab/semilab.h"

#include <cmath>
#include <string>
#include <vector>

TEST_CASE("grid handles") {
  slab_grid* g = nullptr;
  REQUIRE(slab_grid_create("unit_square", 15, &g) == SLAB_OK);
  int n = 0;
  double h = 0.0;
  size_t ni = 0, nb = 0;
  REQUIRE(slab_grid_info(g, &n, &h, &ni, &nb) == SLAB_OK);
  CHECK(n == 15);
  CHECK(h == doctest::Approx(1.0 / 16));
  CHECK(ni == 225);
  double d = 0.0;
  CHECK(slab_grid_distance(g, 0.25, 0.5, &d) == SLAB_OK);
  CHECK(d == doctest::Approx(0.25));
  CHECK(slab_grid_distance(g, 1.5, 0.5, &d) == SLAB_PLACEMENT);
  CHECK(std::string(slab_last_error()).size() > 0);
  std::vector<double> xy(2 * ni);
  CHECK(slab_grid_points(g, xy.data(), xy.size()) == SLAB_OK);
  CHECK(xy[0] == doctest::Approx(1.0 / 16));
  CHECK(slab_grid_points(g, xy.data(), 3) == SLAB_INVALID_ARGUMENT);
  slab_grid_destroy(g);

  slab_grid* bad = nullptr;
  CHECK(slab_grid_create("unit_torus", 15, &bad) != SLAB_OK);
  CHECK(bad == nullptr);
  CHECK(slab_grid_create("unit_square", 0, &bad) == SLAB_INVALID_RESOLUTION);
  CHECK(slab_grid_create(nullptr, 8, &bad) == SLAB_INVALID_ARGUMENT);
}

TEST_CASE("norm entry points") {
  double gap = -1.0;
  REQUIRE(slab_young_gap(1.0, std::expm1(1.0), &gap) == SLAB_OK);
  CHECK(std::abs(gap) <= 1e-12);
  // Unit mass at one point: N(1/k) = 1.
  const double v = 1.0, w = 1.0;
  double k = 0.0;
  REQUIRE(slab_luxemburg_norm(&v, &w, 1, SLAB_P, &k) == SLAB_OK);
  CHECK(std::expm1(1.0 / k) - 1.0 / k == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(slab_luxemburg_norm(&v, &w, 1, static_cast<slab_nfunction>(7), &k) == SLAB_INVALID_ARGUMENT);

  slab_grid* g = nullptr;
  REQUIRE(slab_grid_create("unit_square", 16, &g) == SLAB_OK);
  std::vector<double> ones(256, 1.0);
  double a = 0.0, b = 0.0;
  CHECK(slab_grid_luxemburg_norm(g, ones.data(), ones.size(), SLAB_P, SLAB_LEBESGUE, &a) == SLAB_OK);
  // Constant 1 with total weight (16/17)^2.
  const double area = std::pow(16.0 / 17.0, 2);
  CHECK(area * (std::expm1(1.0 / a) - 1.0 / a) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(slab_llogl_norm(g, ones.data(), ones.size(), SLAB_LEBESGUE, &b) == SLAB_OK);
  CHECK(b > 0.0);
  CHECK(slab_grid_luxemburg_norm(g, ones.data(), 10, SLAB_P, SLAB_RHO, &a) == SLAB_GRID_MISMATCH);
  slab_grid_destroy(g);
}

TEST_CASE("run reports") {
  const char* cfg = R"({"grid": {"domain": "unit_square", "n": 24},
                        "measure": {"density": [{"kind": "constant", "s0": 0.2, "s1": 0.8, "c": 1.0}]}})";
  slab_report* r = nullptr;
  REQUIRE(slab_run("solve", cfg, &r) == SLAB_OK);
  CHECK(std::string(slab_report_verdict(r)) == "converged");
  CHECK(slab_report_outcome(r) == SLAB_OUTCOME_SUCCESS);
  REQUIRE(slab_report_field_count(r) >= 2);
  CHECK(std::string(slab_report_field_name(r, 0)) == "field");
  CHECK(std::string(slab_report_field_csv(r, 0)).rfind("x,y,value\n", 0) == 0);
  CHECK(slab_report_field_name(r, 99) == nullptr);
  const std::string full = slab_report_json(r);
  const std::string stable = slab_report_json_stable(r);
  CHECK(full.find("\"timing\"") != std::string::npos);
  CHECK(stable.find("\"timing\"") == std::string::npos);

  slab_report* again = nullptr;
  REQUIRE(slab_run("solve", cfg, &again) == SLAB_OK);
  CHECK(stable == std::string(slab_report_json_stable(again)));
  slab_report_destroy(again);
  slab_report_destroy(r);
}

TEST_CASE("config errors") {
  slab_report* r = nullptr;
  CHECK(slab_run("solve", "{not json", &r) == SLAB_CONFIG);
  CHECK(r == nullptr);
  CHECK(slab_run("solve", R"({"grid": {"n": 8}, "bogus": 1})", &r) == SLAB_CONFIG);
  CHECK(std::string(slab_last_error()).find("bogus") != std::string::npos);
  CHECK(slab_run("fly", "{}", &r) == SLAB_CONFIG);
  CHECK(slab_run("solve", R"({"grid": {"n": "many"}})", &r) == SLAB_CONFIG);
  CHECK(slab_run_experiment("warp", "{}", &r) == SLAB_CONFIG);
  CHECK(slab_run_experiment("duality_gap", R"({"kind": "capacity_shrink"})", &r) == SLAB_CONFIG);
  // Library errors keep their own codes.
  CHECK(slab_run_experiment("dirac_threshold", R"({"levels": [16, 32], "a_grid_pi": [1, 2]})", &r) == SLAB_RANGE);
}

TEST_CASE("inconclusive outcome") {
  // A saturation tolerance nobody can meet with growth below the growth bar.
  const char* cfg = R"({"n": 32, "B_grid": [5, 10], "saturation_tolerance": 1e-9, "growth_minimum": 100,
                        "capacity_levels": [16, 32]})";
  slab_report* r = nullptr;
  REQUIRE(slab_run_experiment("removability_interior", cfg, &r) == SLAB_OK);
  CHECK(std::string(slab_report_verdict(r)) == "inconclusive");
  CHECK(slab_report_outcome(r) == SLAB_OUTCOME_INCONCLUSIVE);
  slab_report_destroy(r);
}
