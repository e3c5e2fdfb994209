#pragma once

// Semilinear Dirichlet problem -Delta u + g(u) = f with nodal or measure
// boundary data: damped Newton on the 5-point discretization, the monotone
// truncation scheme for unbounded densities, weak-residual and energy-identity
// verification, comparison checks and the logarithmic barrier probe.

#include "semilab/grid.hpp"
#include "semilab/measures.hpp"

#include <limits>
#include <string>
#include <vector>

namespace semilab {

struct Nonlinearity {
  enum class Kind { exp, power };
  Kind kind = Kind::exp;
  double q = 2.0;  // power case: |u|^(q-1) u

  static Nonlinearity exponential() { return {}; }
  static Nonlinearity power(double q);

  // g(u); +inf when the exponential guard trips.
  double g(double u) const;
  double g_prime(double u) const;
  std::string name() const;
};

Nonlinearity nonlinearity_from_string(const std::string& name, double q = 2.0);

struct SolveOptions {
  double tolerance = 1e-10;  // on max |-Delta_h u + g(u) - f|
  int max_newton = 50;
  int max_halvings = 30;
  // Start from min(H, ln(2 / rho^2)) instead of H when the lift is large.
  bool barrier_start = true;
  bool throw_on_failure = true;
};

// Discrete Dirichlet problem. Interior nodes listed in fixed_nodes keep the
// corresponding fixed_values (holes carrying Dirichlet data).
struct DirichletProblem {
  GridPtr grid;
  std::vector<double> boundary_values;  // nodal data per boundary node (empty = 0)
  std::vector<double> boundary_masses;  // nodal masses when the data come from a measure
  std::vector<double> source;           // per interior node (empty = 0)
  std::vector<int> fixed_nodes;
  std::vector<double> fixed_values;
  std::vector<double> initial;  // optional starting iterate
};

struct TruncationStep {
  double k = 0.0;
  std::vector<double> probe_values;
  double max_u = 0.0;
  double integral_u = 0.0;
  double mass = 0.0;  // discrete mass of the truncated data
  double energy_gap = 0.0;
  int newton_iters = 0;
  bool reused = false;  // truncation inactive, previous solve reused
};

struct SolveReport {
  ScalarField u;
  ScalarField lift;  // harmonic part H
  int newton_iters = 0;
  double residual_inf = 0.0;
  std::vector<double> residual_trace;
  std::vector<double> quadratic_ratios;  // r_{k+1} / r_k^2
  bool converged = false;
  bool roundoff_floor = false;  // stopped at the floating-point floor of the residual
  bool saturated = false;       // exponential guard tripped in the final state
  std::string message;
  double weak_residual = std::numeric_limits<double>::quiet_NaN();
  double energy_lhs = std::numeric_limits<double>::quiet_NaN();
  double energy_rhs = std::numeric_limits<double>::quiet_NaN();
  double mass_balance = std::numeric_limits<double>::quiet_NaN();  // |lhs - rhs| of the zeta0 identity
  std::vector<TruncationStep> truncation_trace;
};

SolveReport solve_dirichlet(const DirichletProblem& problem, const Nonlinearity& g = {}, const SolveOptions& opt = {});
SolveReport solve_dirichlet(const GridPtr& grid, const BoundaryMeasure& mu, const Nonlinearity& g = {},
                            std::span<const double> source = {}, const SolveOptions& opt = {});
DirichletProblem problem_from_measure(const GridPtr& grid, const BoundaryMeasure& mu, std::span<const double> source = {});

// -Delta_h zeta0 = 1, zeta0 = 0 on the boundary (the grid caches the solve).
ScalarField zeta0(const GridPtr& grid);

struct EnergyIdentity {
  double lhs = 0.0;  // sum (u + g(u) zeta0) dx
  double rhs = 0.0;  // -int d zeta0/d nu dmu + sum f zeta0 dx (discrete normal derivative)
};
// Uses the boundary values carried by u; the boundary term is sum_j b_j (C^T zeta0)_j.
EnergyIdentity energy_identity(const ScalarField& u, std::span<const double> source, const Nonlinearity& g);

// Test battery and weak residual of the integral identity, normalized per test function.
struct TestFunction {
  std::string name;
  std::vector<double> closed;  // (n+2)^2 closed-grid samples, zero on the boundary
};
enum class Battery { full, zeta0_only };
std::vector<TestFunction> test_battery(const GridPtr& grid, Battery which = Battery::full);
double weak_residual(const ScalarField& u, std::span<const double> boundary_masses, const Nonlinearity& g,
                     const std::vector<TestFunction>& battery, std::span<const double> source = {});

std::vector<double> default_k_schedule();

struct TruncationOptions {
  std::vector<double> k_schedule = default_k_schedule();
  std::vector<Point> probes;
  double monotone_tolerance = 1e-10;
};
SolveReport truncation_scheme(const GridPtr& grid, const BoundaryMeasure& mu, const TruncationOptions& topt = {},
                              const Nonlinearity& g = {}, const SolveOptions& opt = {});

struct ComparisonResult {
  bool ordered = false;
  double max_violation = 0.0;  // max(u_small - u_big)
  SolveReport small;
  SolveReport big;
};
ComparisonResult comparison_check(const GridPtr& grid, const BoundaryMeasure& mu_small, const BoundaryMeasure& mu_big,
                                  const Nonlinearity& g = {}, const SolveOptions& opt = {});

struct LimitCheck {
  bool nondecreasing = false;
  bool bound_holds = false;
  std::vector<double> lhs;  // sum (u_n + g(u_n) zeta0) dx
  double bound = 0.0;       // -int d zeta0/d nu dmu_limit
  std::vector<double> increments;  // sum (u_n - u_{n-1}) dx
  double l1_to_limit = 0.0;        // || u_N - u_mu ||_1
};
LimitCheck increasing_limit_check(const GridPtr& grid, const std::vector<BoundaryMeasure>& sequence,
                                  const BoundaryMeasure& limit, const Nonlinearity& g = {}, const SolveOptions& opt = {});

struct BarrierFit {
  double C = 0.0;
  double D = 0.0;
  double max_violation = 0.0;  // max(u - (C X + D), 0) on the annulus
  double envelope_D = 0.0;     // smallest D making the fitted-C bound hold
  int samples = 0;
};
// Fit u against X = ln(2 / rho_K) (interior K) on 2h <= rho_K <= 0.3.
BarrierFit keller_osserman_probe(const ScalarField& u, const std::vector<Point>& K_points);
// Boundary case: X = rho ln(2 / rho_K) / rho_K with K a boundary node set.
BarrierFit keller_osserman_probe_boundary(const ScalarField& u, const std::vector<int>& K_boundary_nodes);

}  // namespace semilab
