#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "semilab/error.hpp"
#include "semilab/experiments.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>

using namespace semilab;
using testsupport::pi;

namespace {

DiracOptions small_dirac() {
  DiracOptions o;
  o.levels = {32, 64, 128};
  return o;
}

}  // namespace

TEST_CASE("dirac classifier at the ends of the range") {
  const auto o = small_dirac();
  const auto lo = classify_dirac(2 * pi, o);
  CHECK(lo.verdict == "stable");
  REQUIRE(lo.levels.size() == 3);
  REQUIRE(lo.felt_mass.size() == 2);
  // Below the threshold the centre node feels the full mass.
  for (double b : lo.felt_mass) CHECK(b == doctest::Approx(2 * pi).epsilon(0.02));
  const auto hi = classify_dirac(6 * pi, o);
  CHECK(hi.verdict == "blow_up");
  for (double b : hi.felt_mass) CHECK(b < 4.2 * pi);
}

TEST_CASE("dirac classifier follows the monotone evidence rule") {
  auto full = small_dirac();
  auto prefix = full;
  prefix.levels = {32, 64};
  for (double m : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    const auto a = classify_dirac(m * pi, full);
    const auto b = classify_dirac(m * pi, prefix);
    if (a.verdict == "stable") CHECK(b.verdict == "stable");
    // The prefix result reuses the same solves.
    CHECK(b.levels[1].centre_value == a.levels[1].centre_value);
  }
}

TEST_CASE("dirac threshold bracket and errors") {
  auto o = small_dirac();
  o.target_width = pi / 2;
  const auto r = dirac_threshold(o);
  CHECK(r.converged);
  CHECK(r.upper - r.lower <= pi / 2);
  CHECK(r.lower > 3 * pi);
  CHECK(r.upper < 5 * pi);
  // Both endpoints are among the audited evaluations.
  auto has = [&](double a, const char* v) {
    return std::any_of(r.evaluations.begin(), r.evaluations.end(),
                       [&](const DiracClassification& e) { return e.a == a && e.verdict == v && e.levels.size() == 3; });
  };
  CHECK(has(r.lower, "stable"));
  CHECK(has(r.upper, "blow_up"));

  auto all_stable = o;
  all_stable.a_grid = {2 * pi, 3 * pi};
  CHECK_THROWS_AS(dirac_threshold(all_stable), Error);
  auto all_blow = o;
  all_blow.a_grid = {5.5 * pi, 6 * pi};
  try {
    dirac_threshold(all_blow);
    FAIL("expected a range error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::range);
  }
  auto odd = o;
  odd.levels = {33, 65};
  CHECK_THROWS_AS(classify_dirac(2 * pi, odd), Error);
  auto unsorted = o;
  unsorted.levels = {64, 32};
  CHECK_THROWS_AS(classify_dirac(2 * pi, unsorted), Error);
}

TEST_CASE("dirac classification is deterministic") {
  const auto o = small_dirac();
  const auto a = classify_dirac(4 * pi, o);
  const auto b = classify_dirac(4 * pi, o);
  CHECK(a.verdict == b.verdict);
  CHECK(a.felt_mass == b.felt_mass);
  CHECK(a.integral_ratios == b.integral_ratios);
}

TEST_CASE("interior removability") {
  SUBCASE("empty set gives zero") {
    RemovabilityInteriorOptions o;
    o.n = 32;
    o.K.shape = InteriorSet::Shape::empty;
    o.capacity_levels = {16, 32};
    const auto r = removability_interior(o);
    for (const auto& run : r.runs) {
      CHECK(run.probe == 0.0);
      CHECK(run.centre == 0.0);
    }
    for (double c : r.capacities) CHECK(c == 0.0);
    CHECK(r.verdict == "removable_consistent");
  }
  SUBCASE("single node: probes increase with shrinking increments") {
    RemovabilityInteriorOptions o;
    o.n = 64;
    o.capacity_levels = {32, 64};
    const auto r = removability_interior(o);
    REQUIRE(r.increments.size() == 3);
    for (std::size_t k = 0; k < r.increments.size(); ++k) {
      CHECK(r.increments[k] > 0.0);
      if (k > 0) CHECK(r.increments[k] < r.increments[k - 1]);
    }
    CHECK(r.capacity_decreasing);
    CHECK(r.log_quantity > 0.0);
    // Probes stay below the logarithmic barrier at distance 0.25.
    for (const auto& run : r.runs) CHECK(run.probe <= std::log(8.0 / (0.25 * 0.25)) + 0.5);
  }
  SUBCASE("probe ring must fit") {
    RemovabilityInteriorOptions o;
    o.n = 32;
    o.K.centre = {0.2, 0.5};
    o.capacity_levels = {};
    CHECK_THROWS_AS(removability_interior(o), Error);
  }
}

TEST_CASE("boundary removability") {
  RemovabilityBoundaryOptions o;
  o.n = 32;
  o.arc_lengths = {0.4, 0.2, 0.0};
  o.atom_levels = {16, 32, 64};
  const auto r = removability_boundary(o);
  REQUIRE(r.arc_runs.size() == 3);
  CHECK(r.arc_runs[2].nodes == 0);
  CHECK(r.arc_runs[2].probe == 0.0);
  CHECK(r.arc_runs[2].capacity == 0.0);
  CHECK(r.jointly_decreasing);
  for (std::size_t k = 0; k + 1 < r.B_runs.size(); ++k) CHECK(r.B_runs[k + 1].probe > r.B_runs[k].probe);
  CHECK(r.sublinear);
  CHECK(r.atoms.size() == 3);
}

TEST_CASE("admissibility sweep") {
  AdmissibilitySweepOptions o;
  o.scales = {0.5, 1.0, 2.0};
  o.levels = {16, 32, 64};
  o.norm_level = 32;
  const auto r = admissibility_sweep(o);
  REQUIRE(r.rows.size() == 4);
  for (const auto& row : r.rows) {
    REQUIRE(row.reports.size() == 3);
    CHECK(row.bexp_norm > 0.0);
    CHECK(row.a0_lower <= row.a0_upper);
  }
  const auto& bounded = r.rows[0];
  CHECK(bounded.name == "bounded_density");
  for (const auto& rep : bounded.reports) CHECK(rep.verdict == Verdict::admissible);
  CHECK(std::isinf(bounded.a0_upper));
  const auto& atom = r.rows[1];
  CHECK(atom.name == "atom");
  for (const auto& rep : atom.reports) CHECK(rep.verdict == Verdict::not_admissible);
  CHECK(atom.a0_lower == 0.0);

  auto bad = o;
  bad.scales = {1.0, 0.5};
  CHECK_THROWS_AS(admissibility_sweep(bad), Error);
}

TEST_CASE("capacity shrink and duality gap") {
  CapacityShrinkOptions o;
  o.n = 32;
  const auto r = capacity_shrink(o);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].length == 0.4);
  CHECK(r.weak_duality);
  CHECK(r.monotone);
  CHECK(r.primal_strictly_decreasing);

  DualityGapOptions g;
  g.levels = {24, 32};
  const auto d = duality_gap(g);
  REQUIRE(d.rows.size() == 3);
  CHECK(d.weak_duality);
  for (const auto& row : d.rows) {
    REQUIRE(row.gap.size() == 2);
    for (double x : row.gap) CHECK(x >= -1e-9);
  }
}
