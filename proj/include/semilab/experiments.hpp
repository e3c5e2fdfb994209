#pragma once

// Scenario drivers: interior Dirac threshold, interior and boundary
// removability probes, admissibility sweeps and capacity studies. Every driver
// is deterministic given its options.

#include "semilab/capacity.hpp"
#include "semilab/potentials.hpp"
#include "semilab/solver.hpp"

#include <numbers>
#include <string>
#include <vector>

namespace semilab {

// ---------------------------------------------------------------------------
// Dirac threshold

// Unit square with the atom at the centre node; levels must be even.
struct DiracOptions {
  std::vector<int> levels{64, 128, 256};  // 1/h; the grid has levels - 1 interior nodes per axis
  std::vector<double> a_grid{2 * std::numbers::pi, 6 * std::numbers::pi};
  double deficit_threshold = 0.15;  // on (a - felt mass) / a
  double target_width = std::numbers::pi / 4;
  int max_bisections = 20;
};

struct DiracLevel {
  int level = 0;
  int n = 0;
  double centre_value = 0.0;
  double integral = 0.0;  // sum (e^u - 1) dx
  int newton_iters = 0;
  bool saturated = false;
};

struct DiracClassification {
  double a = 0.0;
  std::string verdict;  // stable | blow_up | inconclusive
  std::vector<DiracLevel> levels;
  std::vector<double> felt_mass;        // 2 pi (u_c(h/2) - u_c(h)) / ln 2 per level pair
  std::vector<double> deficits;         // (a - felt_mass) / a
  std::vector<double> integral_ratios;  // I_{next} / I
};

struct DiracThresholdReport {
  std::vector<DiracClassification> evaluations;  // in evaluation order
  double lower = 0.0;  // largest stable a below the smallest blow-up a
  double upper = 0.0;
  bool converged = false;  // width reached target
  std::string message;
};

DiracClassification classify_dirac(double a, const DiracOptions& opt = {});
DiracThresholdReport dirac_threshold(const DiracOptions& opt = {});

// ---------------------------------------------------------------------------
// Removability

struct InteriorSet {
  enum class Shape { empty, point, box };
  Shape shape = Shape::point;
  Point centre{0.5, 0.5};
  double side = 0.0;  // box side
};
std::vector<int> interior_set_nodes(const Grid2D& grid, const InteriorSet& K);

struct RemovabilityInteriorOptions {
  int n = 128;
  InteriorSet K;
  std::vector<double> B_grid{5, 10, 20, 40};
  double probe_distance = 0.25;
  double saturation_tolerance = 0.05;  // last increment for "saturates"
  double growth_minimum = 0.5;         // every increment for "grows"
  std::vector<int> capacity_levels{32, 64, 128};
};

struct BRun {
  double B = 0.0;
  double probe = 0.0;
  double centre = 0.0;
  int newton_iters = 0;
  bool converged = false;
};

struct RemovabilityInteriorReport {
  std::vector<BRun> runs;
  std::vector<double> increments;  // probe(B_{k+1}) - probe(B_k)
  std::vector<int> capacity_levels;
  std::vector<double> capacities;
  double log_quantity = 0.0;  // sum |Delta_h zeta| ln(1 + |Delta_h zeta|) dx for the finest minimizer
  BarrierFit barrier;         // fit at the largest B
  bool saturates = false;
  bool grows = false;
  bool capacity_decreasing = false;
  std::string verdict;  // removable_consistent | non_removable | inconclusive
};

RemovabilityInteriorReport removability_interior(const RemovabilityInteriorOptions& opt = {});

struct RemovabilityBoundaryOptions {
  int n = 128;
  double arc_centre = 0.5;
  double fixed_arc = 0.2;
  std::vector<double> B_grid{5, 10, 20, 40};
  std::vector<double> arc_lengths{0.4, 0.2, 0.1, 0.05};
  double arc_B = 20.0;
  double ratio_maximum = 1.8;
  std::vector<double> atom_masses{0.5, 1.0, 2.0};
  std::vector<int> atom_levels{32, 64, 128};
};

struct ArcRun {
  double length = 0.0;
  int nodes = 0;
  double capacity = 0.0;
  double probe = 0.0;
};

struct AtomVerdict {
  double mass = 0.0;
  AdmissibilityReport report;
};

struct RemovabilityBoundaryReport {
  std::vector<BRun> B_runs;
  std::vector<double> ratios;  // u_{B_{k+1}} / u_{B_k} at the centre
  bool sublinear = false;
  std::vector<ArcRun> arc_runs;
  bool jointly_decreasing = false;
  std::vector<AtomVerdict> atoms;
  bool atoms_not_admissible = false;
  BarrierFit barrier;  // boundary barrier fit at the largest B on the fixed arc
};

RemovabilityBoundaryReport removability_boundary(const RemovabilityBoundaryOptions& opt = {});

// ---------------------------------------------------------------------------
// Admissibility sweep

struct NamedMeasure {
  std::string name;
  BoundaryMeasure mu;
};
std::vector<NamedMeasure> default_sweep_family();

struct AdmissibilitySweepOptions {
  DomainKind domain = DomainKind::unit_square;
  std::vector<NamedMeasure> family = default_sweep_family();
  std::vector<double> scales{0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<int> levels{32, 64, 128};
  int norm_level = 64;  // grid for the B^exp norm
};

struct SweepRow {
  std::string name;
  double bexp_norm = 0.0;
  std::vector<double> scales;
  std::vector<AdmissibilityReport> reports;
  double a0_lower = 0.0;  // largest admissible scale below the first not_admissible one
  double a0_upper = 0.0;  // first not_admissible scale (inf if none)
};

struct AdmissibilitySweepReport {
  std::vector<SweepRow> rows;
};

AdmissibilitySweepReport admissibility_sweep(const AdmissibilitySweepOptions& opt = {});

// ---------------------------------------------------------------------------
// Capacity studies

struct CapacityShrinkOptions {
  int n = 128;
  double arc_centre = 0.5;
  std::vector<double> arc_lengths{0.4, 0.2, 0.1, 0.05};
  CapacityOptions capacity;
};

struct ShrinkRow {
  double length = 0.0;
  CapacityReport report;
};

struct CapacityShrinkReport {
  std::vector<ShrinkRow> rows;  // in the order of arc_lengths
  bool primal_strictly_decreasing = false;
  bool weak_duality = false;
  bool monotone = false;
};

CapacityShrinkReport capacity_shrink(const CapacityShrinkOptions& opt = {});

struct DualityGapOptions {
  std::vector<int> levels{64, 128};
  double arc_centre = 0.5;
  std::vector<double> arc_lengths{0.1, 0.2, 0.4};
  CapacityOptions capacity;
};

struct GapRow {
  double length = 0.0;
  std::vector<int> levels;
  std::vector<double> primal, dual, gap;
  bool non_increasing = false;
};

struct DualityGapReport {
  std::vector<GapRow> rows;
  bool weak_duality = false;
  bool all_non_increasing = false;
};

DualityGapReport duality_gap(const DualityGapOptions& opt = {});

}  // namespace semilab
