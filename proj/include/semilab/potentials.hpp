#pragma once

// Poisson and Green potentials: closed-form unit-disk kernels, discrete harmonic
// extension and Green solves, B^exp norms and the refinement admissibility test.

#include "semilab/grid.hpp"
#include "semilab/measures.hpp"

#include <string>
#include <utility>
#include <vector>

namespace semilab {

enum class PotentialKind { poisson, green };
std::string to_string(PotentialKind kind);

struct PotentialReport {
  ScalarField field;
  PotentialKind kind = PotentialKind::poisson;
  double measure_tv = 0.0;
  std::vector<std::pair<int, double>> refinement_trace;
};

// (1 - |x|^2) / (2 pi |x - y|^2), |x| < 1, |y| = 1.
double poisson_kernel_disk(Point x, Point y);
// (1 / 2 pi) ln(|y| |x - y*| / |x - y|), y* = y / |y|^2; y = 0 gives -ln|x| / 2 pi.
double green_kernel_disk(Point x, Point y);

// How the boundary potential is formed on the disk: closed-form kernel summation
// (default) or the discrete polar Laplace solve. The square always uses the solve.
enum class PoissonRoute { automatic, kernel, discrete };

// Discrete harmonic function with the given nodal boundary values.
ScalarField harmonic_extension(const GridPtr& grid, std::span<const double> boundary_values);
// Potential of nodal boundary masses (density interpretation mass / arclength weight).
ScalarField poisson_potential_of_masses(const GridPtr& grid, std::span<const double> masses,
                                        PoissonRoute route = PoissonRoute::automatic);
PotentialReport poisson_potential(const GridPtr& grid, const BoundaryMeasure& mu,
                                  PoissonRoute route = PoissonRoute::automatic);

// -Delta_h G = source, G = 0 on the boundary.
ScalarField green_potential_of_source(const GridPtr& grid, std::span<const double> source);
PotentialReport green_potential(const GridPtr& grid, const InteriorMeasure& mu);

double bexp_boundary_norm(const GridPtr& grid, const BoundaryMeasure& mu);
double bexp_interior_norm(const GridPtr& grid, const InteriorMeasure& mu);

enum class Verdict { admissible, not_admissible, inconclusive };
std::string to_string(Verdict v);

struct AdmissibilityLevel {
  int n = 0;
  double integral = 0.0;  // sum exp(H) rho dx
  double max_potential = 0.0;
  bool saturated = false;  // exp guard tripped
};

struct AdmissibilityReport {
  Verdict verdict = Verdict::inconclusive;
  std::vector<AdmissibilityLevel> levels;
  std::vector<double> ratios;  // I_{next} / I_current
  double tau = 0.1;
  double growth_threshold = 1.5;
};

AdmissibilityReport admissibility_test(DomainKind domain, const std::vector<int>& levels, const BoundaryMeasure& mu,
                                       double tau = 0.1, double growth_threshold = 1.5);

}  // namespace semilab
