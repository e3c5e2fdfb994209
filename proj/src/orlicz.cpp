#include "semilab/orlicz.hpp"

#include "semilab/detail/roots.hpp"
#include "semilab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace semilab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pstar(p(t)) = t e^t - (e^t - 1) for t >= 0.
double conj_of_p(double t) {
  if (t < 0.5) {
    double term = t, sum = 0.0;
    for (int k = 2; k < 30; ++k) {
      term *= t / k;  // t^k / k!
      sum += (k - 1) * term;
    }
    return sum;
  }
  return t * std::exp(t) - std::expm1(t);
}

// P(pbar(t)) = t - ln(1 + t) for t >= 0.
double conj_of_pbar(double t) {
  if (t < 0.1) {
    double term = -t, sum = 0.0;
    for (int k = 2; k < 24; ++k) {
      term *= -t;  // (-1)^k t^k
      sum += term / k;
    }
    return sum;
  }
  return t - std::log1p(t);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Upper end of a bracket for an increasing level function starting from `start`.
template <class F>
double grow_bracket(F&& residual, double start) {
  double hi = start;
  for (int doubling = 0; doubling <= 200; ++doubling) {
    if (residual(hi) > 0.0) return hi;
    hi *= 2.0;
  }
  fail(ErrorCode::overflow, "norm bracket not found within 200 doublings");
}

}  // namespace

std::string to_string(NKind kind) { return kind == NKind::P ? "P" : "Pstar"; }

NKind nkind_from_string(const std::string& name) {
  if (name == "P" || name == "exp") return NKind::P;
  if (name == "Pstar" || name == "llogl") return NKind::Pstar;
  fail(ErrorCode::config, "unknown N-function '" + name + "'");
}

double NFunctionPair::P(double t) {
  const double a = std::abs(t);
  if (a > kExpGuard) return kInf;
  if (a < 0.1) {
    double term = a, sum = 0.0;
    for (int k = 2; k < 16; ++k) {
      term *= a / k;
      sum += term;
    }
    return sum;
  }
  return std::expm1(a) - a;
}

double NFunctionPair::Pstar(double t) {
  const double a = std::abs(t);
  if (a < 0.1) {
    double power = a, sum = 0.0;
    for (int k = 2; k < 20; ++k) {
      power *= -a;  // (-1)^(k-1) a^k
      sum -= power / (k * (k - 1.0));
    }
    return sum;
  }
  return (a + 1.0) * std::log1p(a) - a;
}

double NFunctionPair::p(double s) {
  const double a = std::abs(s);
  const double v = a > kExpGuard ? kInf : std::expm1(a);
  return s < 0 ? -v : v;
}

double NFunctionPair::pbar(double s) {
  const double v = std::log1p(std::abs(s));
  return s < 0 ? -v : v;
}

double NFunctionPair::second_derivative(NKind kind, double t) {
  const double a = std::abs(t);
  if (kind == NKind::P) return a > kExpGuard ? kInf : std::exp(a);
  return 1.0 / (1.0 + a);
}

double NFunctionPair::P_inverse(double s) {
  require(s >= 0.0 && std::isfinite(s), ErrorCode::invalid_argument, "P_inverse needs a finite s >= 0");
  if (s == 0.0) return 0.0;
  const double hi = grow_bracket([&](double t) { return P(t) - s; }, 1.0);
  return detail::increasing_root([&](double t) { return std::pair{P(t) - s, p(t)}; }, 0.0, hi, 1e-15);
}

double young_gap(double x, double y) {
  return NFunctionPair::P(x) + NFunctionPair::Pstar(y) - x * y;
}

// ---------------------------------------------------------------------------
// Luxemburg norm, solved in s = 1/k where sum N(s phi) w - 1 is convex increasing.

namespace {

struct LevelSums {
  double value;
  double slope;
};

LevelSums luxemburg_level(std::span<const double> v, std::span<const double> w, NKind kind, double s) {
  double g = 0.0, dg = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]) * s;
    if (a == 0.0) continue;
    if (kind == NKind::P && a > kExpGuard) return {kInf, kInf};
    g += NFunctionPair::eval(kind, a) * w[i];
    dg += NFunctionPair::derivative(kind, a) * std::abs(v[i]) * w[i];
  }
  return {g - 1.0, dg};
}

double luxemburg_inverse_level(std::span<const double> v, std::span<const double> w, NKind kind, double tolerance) {
  const double M = max_abs(v);
  if (M == 0.0) return 0.0;
  const double hi = grow_bracket([&](double s) { return luxemburg_level(v, w, kind, s).value; }, 1.0 / M);
  const double rel = std::min(tolerance, 1e-15);
  return detail::increasing_root(
      [&](double s) {
        const auto l = luxemburg_level(v, w, kind, s);
        return std::pair{l.value, l.slope};
      },
      0.0, hi, rel);
}

}  // namespace

double luxemburg_norm(std::span<const double> values, std::span<const double> weights, NKind kind, double tolerance) {
  require(values.size() == weights.size(), ErrorCode::grid_mismatch, "values and weights differ in length");
  for (double x : values) require(std::isfinite(x), ErrorCode::invalid_argument, "Luxemburg norm of a non-finite field");
  const double s = luxemburg_inverse_level(values, weights, kind, tolerance);
  return s == 0.0 ? 0.0 : 1.0 / s;
}

double luxemburg_norm(const ScalarField& field, const LuxemburgNorm& spec) {
  const auto w = quadrature_weights(*field.grid, spec.weight);
  return luxemburg_norm(field.values, w, spec.nfunction, spec.tolerance);
}

NormGradient luxemburg_norm_gradient(std::span<const double> values, std::span<const double> weights, NKind kind,
                                     double tolerance) {
  NormGradient out;
  out.gradient.assign(values.size(), 0.0);
  out.value = luxemburg_norm(values, weights, kind, tolerance);
  out.level = out.value;
  if (out.value == 0.0) return out;
  const double s = 1.0 / out.value;
  double denom = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = NFunctionPair::derivative(kind, values[i] * s) * weights[i];
    out.gradient[i] = d;
    denom += d * values[i] * s;
  }
  for (double& g : out.gradient) g /= denom;
  return out;
}

NormGradient orlicz_norm(std::span<const double> values, std::span<const double> weights, NKind kind) {
  require(values.size() == weights.size(), ErrorCode::grid_mismatch, "values and weights differ in length");
  NormGradient out;
  out.gradient.assign(values.size(), 0.0);
  const double M = max_abs(values);
  if (M == 0.0) return out;
  // Stationarity of (1 + sum N(k f) w) / k: sum N*(N'(k f)) w = 1.
  auto level = [&](double k) -> LevelSums {
    double g = 0.0, dg = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double a = std::abs(values[i]) * k;
      if (a == 0.0) continue;
      if (kind == NKind::P && a > kExpGuard) return {kInf, kInf};
      g += (kind == NKind::P ? conj_of_p(a) : conj_of_pbar(a)) * weights[i];
      dg += a * NFunctionPair::second_derivative(kind, a) * std::abs(values[i]) * weights[i];
    }
    return {g - 1.0, dg};
  };
  const double hi = grow_bracket([&](double k) { return level(k).value; }, 1.0 / M);
  const double k = detail::increasing_root(
      [&](double x) {
        const auto l = level(x);
        return std::pair{l.value, l.slope};
      },
      0.0, hi, 1e-15);
  out.level = k;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = NFunctionPair::derivative(kind, k * values[i]) * weights[i];
    out.gradient[i] = d;
    out.value += d * values[i];
  }
  return out;
}

HolderYoung holder_young_pairing(const ScalarField& phi, const ScalarField& psi, Weight weight) {
  require_same_grid(phi, psi);
  const auto w = quadrature_weights(*phi.grid, weight);
  HolderYoung r;
  double pair = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) pair += phi.values[i] * psi.values[i] * w[i];
  r.lhs = std::abs(pair);
  r.lux_phi = luxemburg_norm(phi.values, w, NKind::P);
  r.lux_psi = luxemburg_norm(psi.values, w, NKind::Pstar);
  r.rhs = 2.0 * r.lux_phi * r.lux_psi;
  r.rhs_sharp = r.lux_phi * orlicz_norm(psi.values, w, NKind::Pstar).value;
  return r;
}

// ---------------------------------------------------------------------------
// Dyadic maximal function

SparseMatrix dyadic_leaf_operator(const Grid2D& g) {
  const DyadicTree& t = g.dyadic();
  std::vector<Eigen::Triplet<double>> trip;
  if (g.kind() == DomainKind::unit_disk) {
    const auto pts = g.interior_points();
    const auto areas = g.cell_areas();
    for (std::size_t k = 0; k < pts.size(); ++k)
      trip.emplace_back(static_cast<int>(t.leaf_of(pts[k])), static_cast<int>(k), areas[k]);
  } else {
    // Nearest-node cells, clipped to Q0 so that they tile it exactly.
    const int n = g.n();
    const double h = g.h();
    const double ls = t.leaf_side();
    const int L = t.leaves_per_axis;
    auto cell = [&](int i) {
      const double a = i == 1 ? 0.0 : (i - 0.5) * h;
      const double b = i == n ? 1.0 : (i + 0.5) * h;
      return std::pair{a, b};
    };
    struct Overlap {
      int leaf;
      double length;
    };
    std::vector<std::vector<Overlap>> axis(static_cast<std::size_t>(n) + 1);
    for (int i = 1; i <= n; ++i) {
      const auto [a, b] = cell(i);
      const int q0 = std::clamp(static_cast<int>(std::floor(a / ls)), 0, L - 1);
      const int q1 = std::clamp(static_cast<int>(std::floor(b / ls)), 0, L - 1);
      for (int q = q0; q <= q1; ++q) {
        const double len = std::min(b, (q + 1) * ls) - std::max(a, q * ls);
        if (len > 0.0) axis[i].push_back({q, len});
      }
    }
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i)
        for (const auto& ox : axis[i])
          for (const auto& oy : axis[j]) trip.emplace_back(ox.leaf + oy.leaf * L, g.square_index(i, j), ox.length * oy.length);
  }
  SparseMatrix B(static_cast<Eigen::Index>(t.leaf_count()), static_cast<Eigen::Index>(g.interior_count()));
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

std::vector<double> dyadic_leaf_masses(const ScalarField& field) {
  const SparseMatrix B = dyadic_leaf_operator(*field.grid);
  Eigen::VectorXd f(static_cast<Eigen::Index>(field.values.size()));
  for (std::size_t k = 0; k < field.values.size(); ++k) f[static_cast<Eigen::Index>(k)] = std::abs(field.values[k]);
  const Eigen::VectorXd m = B * f;
  return {m.data(), m.data() + m.size()};
}

std::vector<double> dyadic_maximal_leaves(const DyadicTree& tree, std::span<const double> leaf_mass) {
  require(leaf_mass.size() == tree.leaf_count(), ErrorCode::invalid_argument, "leaf mass vector has the wrong size");
  const int D = tree.depth;
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(D) + 1);
  sums[D].assign(leaf_mass.begin(), leaf_mass.end());
  for (int d = D - 1; d >= 0; --d) {
    const std::size_t Ld = std::size_t{1} << d;
    sums[d].assign(Ld * Ld, 0.0);
    const std::size_t Lc = Ld * 2;
    for (std::size_t iy = 0; iy < Lc; ++iy)
      for (std::size_t ix = 0; ix < Lc; ++ix) sums[d][(ix >> 1) + (iy >> 1) * Ld] += sums[d + 1][ix + iy * Lc];
  }
  std::vector<double> M(tree.leaf_count(), 0.0);
  for (std::size_t leaf = 0; leaf < M.size(); ++leaf) {
    double best = 0.0;
    for (int d = 0; d <= D; ++d) {
      const double side = tree.side / static_cast<double>(std::size_t{1} << d);
      best = std::max(best, sums[d][tree.ancestor(leaf, d)] / (side * side));
    }
    M[leaf] = best;
  }
  return M;
}

ScalarField maximal_function(const ScalarField& field) {
  const Grid2D& g = *field.grid;
  const auto leafM = dyadic_maximal_leaves(g.dyadic(), dyadic_leaf_masses(field));
  ScalarField out = ScalarField::zeros(field.grid, false);
  const auto pts = g.interior_points();
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = leafM[g.dyadic().leaf_of(pts[k])];
  return out;
}

double llogl_norm(const ScalarField& field, Weight weight) { return integrate(maximal_function(field), weight); }

}  // namespace semilab
