#pragma once

// The exponential / L ln L pair of complementary N-functions, Luxemburg and
// Orlicz (Amemiya) norms on grid quadratures, and the dyadic maximal function.

#include "semilab/grid.hpp"

#include <span>
#include <vector>

namespace semilab {

enum class NKind { P, Pstar };
std::string to_string(NKind kind);
NKind nkind_from_string(const std::string& name);

struct NFunctionPair {
  // e^|t| - 1 - |t|
  static double P(double t);
  // (|t| + 1) ln(|t| + 1) - |t|
  static double Pstar(double t);
  // P'(s) = sgn(s)(e^|s| - 1)
  static double p(double s);
  // Pstar'(s) = sgn(s) ln(|s| + 1)
  static double pbar(double s);
  // t >= 0 with P(t) = s, s >= 0.
  static double P_inverse(double s);

  static double eval(NKind kind, double t) { return kind == NKind::P ? P(t) : Pstar(t); }
  static double derivative(NKind kind, double t) { return kind == NKind::P ? p(t) : pbar(t); }
  static double second_derivative(NKind kind, double t);
  static NKind conjugate(NKind kind) { return kind == NKind::P ? NKind::Pstar : NKind::P; }
};

// Arguments of e^t above this are treated as overflow.
inline constexpr double kExpGuard = 700.0;

// P(x) + Pstar(y) - x y.
double young_gap(double x, double y);

struct LuxemburgNorm {
  NKind nfunction = NKind::P;
  Weight weight = Weight::rho;
  double tolerance = 1e-10;  // relative, on k
};

struct NormGradient {
  double value = 0.0;
  double level = 0.0;             // k for Luxemburg norms, the optimal multiplier for Orlicz norms
  std::vector<double> gradient;   // d value / d values[i]
};

// inf{k > 0 : sum_i N(values_i / k) weights_i <= 1}.
double luxemburg_norm(std::span<const double> values, std::span<const double> weights, NKind kind,
                      double tolerance = 1e-10);
double luxemburg_norm(const ScalarField& field, const LuxemburgNorm& spec);
// Norm together with its gradient (implicit differentiation of the level equation).
NormGradient luxemburg_norm_gradient(std::span<const double> values, std::span<const double> weights, NKind kind,
                                     double tolerance = 1e-10);

// Amemiya form inf_k (1 + sum N(k f_i) w_i) / k, which is the norm dual to the
// Luxemburg norm of the conjugate N-function.
NormGradient orlicz_norm(std::span<const double> values, std::span<const double> weights, NKind kind);

struct HolderYoung {
  double lhs = 0.0;        // |sum phi psi w|
  double rhs = 0.0;        // 2 ||phi||_P ||psi||_P*, both Luxemburg
  double rhs_sharp = 0.0;  // ||phi||_P (Luxemburg) times ||psi||_P* (Orlicz form)
  double lux_phi = 0.0;
  double lux_psi = 0.0;
};
HolderYoung holder_young_pairing(const ScalarField& phi, const ScalarField& psi, Weight weight);

// Leaf-by-node overlap areas: leaf masses are B |f|.
SparseMatrix dyadic_leaf_operator(const Grid2D& grid);
// Mass of |f~| (extension by zero to Q0) in each depth-D dyadic leaf.
std::vector<double> dyadic_leaf_masses(const ScalarField& field);
// Dyadic maximal function per leaf from leaf masses: max over all ancestors Q
// of mass(Q) / |Q|.
std::vector<double> dyadic_maximal_leaves(const DyadicTree& tree, std::span<const double> leaf_mass);
// M[f] sampled at interior nodes (value of the leaf containing the node).
ScalarField maximal_function(const ScalarField& field);
double llogl_norm(const ScalarField& field, Weight weight);

}  // namespace semilab
