#pragma once

// Orlicz capacities of boundary and interior compact sets: the primal
// test-function minimizations, their dual measure maximizations, duality gaps,
// nested-family drivers with warm starts, the vanishing test on boundary
// measures and the Q(r) bound sweep.

#include "semilab/grid.hpp"
#include "semilab/measures.hpp"
#include "semilab/orlicz.hpp"

#include <limits>
#include <string>
#include <vector>

namespace semilab {

// Smooth positive weight comparable to rho with -Delta_h rho* >= 0:
// sin(pi x) sin(pi y) / pi on the square, (1 - |x|^2) / 2 on the disk.
struct RhoStar {
  ScalarField field;
  static RhoStar canonical(const GridPtr& grid);
};

struct RhoStarCheck {
  bool positive = false;
  double min_neg_laplacian = 0.0;  // min of -Delta_h rho*
  double ratio_min = 0.0;          // rho* / rho on the checked band
  double ratio_max = 0.0;
  int checked = 0;
};
// Ratio checked at nodes with rho <= band that are at least corner_exclusion
// from the square's corners (rho* / rho -> 0 at corners).
RhoStarCheck check_rho_star(const RhoStar& rs, double band = 0.1, double corner_exclusion = 0.2);

// ||rho^{-1} Delta_h (rho* H_eta)||_{L_{P*}, rho} for nodal boundary values eta.
double ndual_norm_of_eta(const GridPtr& grid, std::span<const double> eta);
NormGradient ndual_norm_of_eta_gradient(const GridPtr& grid, std::span<const double> eta);

struct CapacityOptions {
  int margin = 2;  // boundary: nodes on each side of K; interior: node rings around K
  int max_iterations = 500;
  double relative_change = 1e-8;
  int stagnation_window = 50;
  double collar = 2.0;  // interior: eta = 0 where rho <= collar h
};

struct CapacityReport {
  std::vector<int> K;
  std::vector<int> constrained;  // K plus margin (eta = 1)
  double primal_value = std::numeric_limits<double>::quiet_NaN();
  double dual_value = std::numeric_limits<double>::quiet_NaN();
  double gap_rel = std::numeric_limits<double>::quiet_NaN();
  double holder_slack = std::numeric_limits<double>::quiet_NaN();  // ||H||° ||Phi|| - |pairing|
  std::vector<double> eta;      // primal minimizer (boundary or interior nodal)
  std::vector<double> weights;  // dual maximizer, as nodal masses with dual scaling
  std::vector<double> primal_trace;
  std::vector<double> dual_trace;
  int primal_iterations = 0;
  int dual_iterations = 0;
  bool stagnated = false;
  std::string message;
};

CapacityReport boundary_capacity_primal(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt = {},
                                        std::span<const double> warm_eta = {});
// Maximizes sum_j tau_j w_j / ||H_w||°_{P, rho} over w >= 0 on K, where
// tau_j = (C^T (rho* H_{chi_K'}))_j / (arclength weight) is the discrete trace
// of the normal derivative of the primal test function on K.
CapacityReport boundary_capacity_dual(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt = {},
                                      std::span<const double> warm_weights = {});
CapacityReport boundary_capacity(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt = {});
// Nested family K_0 ⊆ K_1 ⊆ ...: the primal runs from the largest set down,
// the dual from the smallest up, each warm-started from its neighbour, so both
// come out monotone.
std::vector<CapacityReport> nested_boundary_capacities(const GridPtr& grid, const std::vector<std::vector<int>>& family,
                                                       const CapacityOptions& opt = {});

enum class InteriorVariant { luxemburg, maximal_l1 };
std::string to_string(InteriorVariant v);
InteriorVariant interior_variant_from_string(const std::string& name);

CapacityReport interior_capacity_primal(const GridPtr& grid, const std::vector<int>& K, InteriorVariant variant,
                                        const CapacityOptions& opt = {}, std::span<const double> warm_eta = {});
// Maximizes mu(K) / ||G[mu]||°_P over nonnegative masses on K.
CapacityReport interior_capacity_dual(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt = {},
                                      std::span<const double> warm_weights = {});
CapacityReport interior_capacity(const GridPtr& grid, const std::vector<int>& K, InteriorVariant variant,
                                 const CapacityOptions& opt = {});
std::vector<CapacityReport> nested_interior_capacities(const GridPtr& grid, const std::vector<std::vector<int>>& family,
                                                       InteriorVariant variant, const CapacityOptions& opt = {});

// Interior nodes in the closed box [lo, hi].
std::vector<int> interior_nodes_in_box(const Grid2D& grid, Point lo, Point hi);

struct VanishingEntry {
  double capacity = 0.0;
  double mass = 0.0;           // mu(K)
  double weighted_mass = 0.0;  // sum over K of tau_j mu_j
  double pairing = 0.0;        // discrete -int d(rho* H_eta)/d nu dmu
  double absorption = 0.0;     // sum (e^u - 1) rho* H_eta dx
  double norm_u = 0.0;         // ||u||°_{P, rho}
  double bound = 0.0;          // absorption + norm_u * capacity
};
struct VanishingReport {
  std::vector<VanishingEntry> entries;
  double u_max = 0.0;
};
VanishingReport vanishing_test(const GridPtr& grid, const BoundaryMeasure& mu, const std::vector<std::vector<int>>& family,
                               const CapacityOptions& opt = {});

// Q(r) = (|r| + 1/2) ln(2|r| + 1) - |r|.
double q_function(double r);
struct QBound {
  double min_q = 0.0;
  double max_ratio = 0.0;      // max Q(r) / (|r| ln(|r| + 1)) over r != 0
  double max_violation = 0.0;  // max(Q - 3 |r| ln(|r| + 1), 0)
  bool holds = false;
};
QBound q_bound_check(std::span<const double> r_samples);

}  // namespace semilab
