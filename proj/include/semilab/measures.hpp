#pragma once

// Finite Radon measures on the boundary (atoms, arclength densities, Cantor
// generators) and in the interior (atoms, densities), with their grid
// discretizations.

#include "semilab/grid.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace semilab {

struct BoundaryAtom {
  double s = 0.0;  // arclength position
  double mass = 0.0;
  std::optional<Point> position;  // when set, s is derived from it at discretization time
};

enum class DensityKind { constant, inverse_sqrt, sine_bump, table };
std::string to_string(DensityKind kind);
DensityKind density_kind_from_string(const std::string& name);

// One density piece supported on [s0, s1] (no wraparound):
//   constant      c
//   inverse_sqrt  c / sqrt(s - s0)
//   sine_bump     c sin^2(pi (s - s0) / (s1 - s0))
//   table         table[m] on the m-th of table.size() equal subintervals
// The piece is evaluated as min(value, cap).
struct DensityPiece {
  DensityKind kind = DensityKind::constant;
  double s0 = 0.0;
  double s1 = 0.0;
  double c = 0.0;
  std::vector<double> table;
  double cap = std::numeric_limits<double>::infinity();

  double value(double s) const;
  // Integral of the capped piece over [a, b].
  double integral(double a, double b) const;
  double total() const { return integral(s0, s1); }
  double sup() const;
};

// Middle-thirds Cantor measure of total `mass` on [s0, s1], realized at generation `depth`.
struct CantorPart {
  double s0 = 0.0;
  double s1 = 0.0;
  double mass = 0.0;
  int depth = 6;

  // Centres of the 2^depth generation-`depth` intervals.
  std::vector<double> centres() const;
};

struct BoundaryMeasure {
  std::vector<BoundaryAtom> atoms;
  std::vector<DensityPiece> density;
  std::vector<CantorPart> cantor;

  double total_variation() const;
  double singular_mass() const;
  double regular_mass() const;
  bool is_zero() const;
  bool has_singular_part() const { return !atoms.empty() || !cantor.empty(); }
  double density_at(double s) const;
  BoundaryMeasure scaled(double a) const;
};

struct Decomposition {
  BoundaryMeasure singular;  // atoms and Cantor parts
  BoundaryMeasure regular;   // density pieces
};
Decomposition lebesgue_decompose(const BoundaryMeasure& mu);
BoundaryMeasure recombine(const Decomposition& parts);

// min(density, k); requires a pure density measure.
BoundaryMeasure truncate_regular(const BoundaryMeasure& mu_R, double k);

// Mass per boundary node. Atoms snap to the nearest node, densities are integrated
// over each node's boundary segment, Cantor parts are expanded atom-wise.
std::vector<double> discretize_boundary(const BoundaryMeasure& mu, const Grid2D& grid);
// Nodal masses divided by the arclength weights (density interpretation).
std::vector<double> boundary_density_values(const std::vector<double>& masses, const Grid2D& grid);

struct Arc {
  double s0 = 0.0;
  double s1 = 0.0;  // s1 may exceed s0 + perimeter only if the arc wraps
};
// Boundary node indices whose arclength lies in the union of arcs (closed, wrap-aware).
std::vector<int> boundary_nodes_in(const Grid2D& grid, const std::vector<Arc>& arcs);
double measure_of_set(const std::vector<double>& node_masses, const std::vector<int>& nodes);

struct InteriorAtom {
  Point x;
  double mass = 0.0;
};

struct InteriorMeasure {
  std::vector<InteriorAtom> atoms;
  std::function<double(Point)> density;  // empty for none

  double atom_mass() const;
  InteriorMeasure scaled(double a) const;
};

// Source density per interior node: an atom of mass a adds a / (cell area) at its
// nearest node (split evenly over exact ties), densities are sampled nodewise.
std::vector<double> discretize_interior(const InteriorMeasure& mu, const Grid2D& grid);
// Sum of source x cell area over the node set.
double interior_measure_of_set(const std::vector<double>& source, const Grid2D& grid, const std::vector<int>& nodes);

}  // namespace semilab
