#include "semilab/capacity.hpp"

#include "semilab/error.hpp"
#include "semilab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace semilab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Vec = Eigen::VectorXd;

Vec to_vec(std::span<const double> v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}
std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Evaluation {
  double value = 0.0;
  std::vector<double> gradient;
};

struct Outcome {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  std::vector<double> trace;
  bool stagnated = false;
};

// Projected gradient with Barzilai-Borwein steps and Armijo backtracking along
// the projection arc. Monotone, so warm starts carry over their value.
template <class F, class Proj>
Outcome projected_gradient(F&& f, Proj&& proj, std::vector<double> x, const CapacityOptions& opt) {
  Outcome out;
  x = proj(x);
  Evaluation e = f(x, true);
  out.trace.push_back(e.value);
  double gmax = 0.0;
  for (double g : e.gradient) gmax = std::max(gmax, std::abs(g));
  double alpha = gmax > 0 ? 0.1 / gmax : 1.0;
  std::vector<double> xt(x.size()), d(x.size());
  for (int it = 1; it <= opt.max_iterations; ++it) {
    bool accepted = false;
    double vt = 0.0;
    for (int ls = 0; ls < 50; ++ls, alpha *= 0.5) {
      for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] - alpha * e.gradient[i];
      xt = proj(xt);
      double dmax = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        d[i] = xt[i] - x[i];
        dmax = std::max(dmax, std::abs(d[i]));
      }
      if (dmax == 0.0) break;
      vt = f(xt, false).value;
      if (vt <= e.value + 1e-4 * dot(e.gradient, d)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    Evaluation et = f(xt, true);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = et.gradient[i] - e.gradient[i];
    const double sy = dot(d, y);
    alpha = sy > 0 ? dot(d, d) / sy : 2.0 * alpha;
    const double rel = (e.value - et.value) / std::max(std::abs(e.value), 1e-300);
    x = xt;
    e = std::move(et);
    out.trace.push_back(e.value);
    out.iterations = it;
    if (rel < opt.relative_change) break;
  }
  out.x = std::move(x);
  out.value = e.value;
  return out;
}

// Projected subgradient with diminishing steps for the nonsmooth maximal-function
// objective; keeps the best iterate.
template <class F, class Proj>
Outcome projected_subgradient(F&& f, Proj&& proj, std::vector<double> x, const CapacityOptions& opt) {
  Outcome out;
  x = proj(x);
  Evaluation e = f(x, true);
  out.x = x;
  out.value = e.value;
  out.trace.push_back(e.value);
  int since_best = 0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    double gn = 0.0;
    for (double g : e.gradient) gn += g * g;
    gn = std::sqrt(gn);
    if (gn == 0.0) break;
    const double step = 0.5 / (gn * std::sqrt(static_cast<double>(it)));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step * e.gradient[i];
    x = proj(x);
    e = f(x, true);
    out.trace.push_back(e.value);
    out.iterations = it;
    if (e.value < out.value * (1.0 - opt.relative_change)) {
      out.value = e.value;
      out.x = x;
      since_best = 0;
    } else if (++since_best >= opt.stagnation_window) {
      out.stagnated = true;
      break;
    }
  }
  return out;
}

// Luxemburg P*-norm of Lam x minimized over 0 <= x <= 1 with x_i fixed where state
// is 1 (one) or 2 (zero). Works on the level function m(s) = min_x sum w P*(s Lam x):
// the norm at the optimum is 1/s with m(s) = 1. Each m(s) is a strictly convex
// box-constrained problem with sparse Hessian s^2 Lam^T diag(w P*'') Lam, solved
// by projected Newton; s follows a safeguarded Newton iteration (dm/ds by the
// envelope theorem).
struct LevelNewton {
  const SparseMatrix& Lam;
  SparseMatrix LamT;
  Vec w;
  const std::vector<char>& state;
  int steps = 0;

  LevelNewton(const SparseMatrix& L, const Vec& weights, const std::vector<char>& st)
      : Lam(L), LamT(L.transpose()), w(weights), state(st) {}

  std::vector<double> project(std::vector<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = state[i] == 1 ? 1.0 : state[i] == 2 ? 0.0 : std::clamp(x[i], 0.0, 1.0);
    return x;
  }

  double level(const Vec& f, double s) const {
    double F = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) F += w[i] * NFunctionPair::Pstar(s * f[i]);
    return F;
  }

  // Minimizes the level functional at s in place; returns (m(s), dm/ds).
  std::pair<double, double> inner(double s, std::vector<double>& x) {
    const std::size_t N = x.size();
    std::vector<double> xt(N);
    Vec f = Lam * to_vec(x);
    double F = level(f, s);
    for (int it = 0; it < 200; ++it) {
      Vec dp(f.size()), d2(f.size());
      for (Eigen::Index i = 0; i < f.size(); ++i) {
        dp[i] = w[i] * s * NFunctionPair::pbar(s * f[i]);
        d2[i] = w[i] * s * s / (1.0 + std::abs(s * f[i]));
      }
      const Vec g = LamT * dp;
      const SparseMatrix H = LamT * d2.asDiagonal() * Lam;
      const Vec hd = H.diagonal();
      // Projected gradient in the diagonally scaled metric, so the test is invariant under s.
      double pg = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (state[i] == 0) pg = std::max(pg, std::abs(x[i] - std::clamp(x[i] - g[k] / hd[k], 0.0, 1.0)));
      }
      if (pg <= 1e-12) break;
      const double eps = std::min(1e-3, pg);
      std::vector<int> free_map(N, -1);
      std::vector<int> free_idx;
      for (std::size_t i = 0; i < N; ++i) {
        if (state[i] != 0) continue;
        const double gi = g[static_cast<Eigen::Index>(i)];
        const bool binding = (x[i] <= eps && gi > 0) || (x[i] >= 1 - eps && gi < 0);  // eps-active
        if (!binding) {
          free_map[i] = static_cast<int>(free_idx.size());
          free_idx.push_back(static_cast<int>(i));
        }
      }
      std::vector<double> d(N, 0.0);
      for (std::size_t i = 0; i < N; ++i)
        if (state[i] == 0 && free_map[i] < 0) d[i] = -g[static_cast<Eigen::Index>(i)] / hd[static_cast<Eigen::Index>(i)];
      if (!free_idx.empty()) {
        std::vector<Eigen::Triplet<double>> trip;
        for (int c : free_idx)
          for (SparseMatrix::InnerIterator itH(H, c); itH; ++itH) {
            const int r = free_map[static_cast<std::size_t>(itH.row())];
            if (r >= 0) trip.emplace_back(r, free_map[static_cast<std::size_t>(c)], itH.value());
          }
        SparseMatrix Hf(static_cast<Eigen::Index>(free_idx.size()), static_cast<Eigen::Index>(free_idx.size()));
        Hf.setFromTriplets(trip.begin(), trip.end());
        Vec rhs(static_cast<Eigen::Index>(free_idx.size()));
        for (std::size_t k = 0; k < free_idx.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = -g[free_idx[k]];
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(Hf);
        require(ldlt.info() == Eigen::Success, ErrorCode::internal, "capacity Newton Hessian factorization failed");
        const Vec df = ldlt.solve(rhs);
        for (std::size_t k = 0; k < free_idx.size(); ++k) d[static_cast<std::size_t>(free_idx[k])] = df[static_cast<Eigen::Index>(k)];
      }
      ++steps;
      bool accepted = false;
      double Ft = F;
      Vec ft;
      for (double a = 1.0; a > 1e-10; a *= 0.5) {
        for (std::size_t i = 0; i < N; ++i) xt[i] = x[i] + a * d[i];
        xt = project(xt);
        double decrease = 0.0;
        for (std::size_t i = 0; i < N; ++i) decrease += g[static_cast<Eigen::Index>(i)] * (xt[i] - x[i]);
        ft = Lam * to_vec(xt);
        Ft = level(ft, s);
        if (Ft <= F + 1e-4 * decrease) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      const double drop = F - Ft;
      x.swap(xt);
      f = std::move(ft);
      F = Ft;
      if (drop <= 1e-15 * std::abs(F)) break;
    }
    double dm = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) dm += w[i] * NFunctionPair::pbar(s * f[i]) * f[i];
    return {F, dm};
  }

  double norm_of(const std::vector<double>& x) const {
    const Vec f = Lam * to_vec(x);
    return luxemburg_norm(to_std(f), to_std(w), NKind::Pstar);
  }

  Outcome run(std::vector<double> x, const CapacityOptions& opt) {
    Outcome out;
    x = project(x);
    double best = norm_of(x);
    out.x = x;
    // Candidate start: minimizer of sum w (Lam x)^2 with only the fixed entries imposed, clamped.
    {
      std::vector<int> map(x.size(), -1), idx;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (state[i] == 0) {
          map[i] = static_cast<int>(idx.size());
          idx.push_back(static_cast<int>(i));
        }
      if (!idx.empty()) {
        std::vector<double> base = project(std::vector<double>(x.size(), 0.0));
        const SparseMatrix Q = LamT * w.asDiagonal() * Lam;
        const Vec rhs_full = -(Q * to_vec(base));
        std::vector<Eigen::Triplet<double>> trip;
        for (int c : idx)
          for (SparseMatrix::InnerIterator it(Q, c); it; ++it) {
            const int r = map[static_cast<std::size_t>(it.row())];
            if (r >= 0) trip.emplace_back(r, map[static_cast<std::size_t>(c)], it.value());
          }
        SparseMatrix Qf(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
        Qf.setFromTriplets(trip.begin(), trip.end());
        Vec rhs(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = rhs_full[idx[k]];
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(Qf);
        if (ldlt.info() == Eigen::Success) {
          const Vec sol = ldlt.solve(rhs);
          for (std::size_t k = 0; k < idx.size(); ++k) base[static_cast<std::size_t>(idx[k])] = sol[static_cast<Eigen::Index>(k)];
          base = project(base);
          const double v = norm_of(base);
          if (v < best) {
            best = v;
            out.x = base;
          }
        }
      }
    }
    x = out.x;
    out.value = best;
    out.trace.push_back(best);
    if (best == 0.0) return out;
    double s = 1.0 / best;  // m(s) <= 1 here
    double lo = s, hi = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 100 && steps < 20 * opt.max_iterations; ++outer) {
      const auto [m, dm] = inner(s, x);
      const double v = norm_of(x);
      if (v < best) {
        best = v;
        out.x = x;
      }
      out.trace.push_back(best);
      if (std::abs(m - 1.0) <= 1e-12) break;
      if (m < 1.0)
        lo = std::max(lo, s);
      else
        hi = std::min(hi, s);
      // Newton on log m against log s: m behaves like a power of s.
      const double p = m > 0 && dm > 0 ? s * dm / m : 0.0;
      double next = p > 0 ? s * std::pow(1.0 / m, 1.0 / p) : 2 * s;
      if (!(next > lo && next < hi)) next = std::isfinite(hi) ? std::sqrt(lo * hi) : 2 * s;
      if (std::isfinite(hi) && (hi - lo) <= 1e-12 * hi) break;
      s = next;
    }
    out.value = best;
    out.iterations = steps;
    return out;
  }
};

// Euclidean projection onto {w >= 0, tau . w = 1}.
std::vector<double> project_weighted_simplex(const std::vector<double>& v, const std::vector<double>& tau) {
  auto mass = [&](double lam) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += tau[i] * std::max(0.0, v[i] - lam * tau[i]);
    return s;
  };
  double lo = -1.0, hi = 1.0;
  while (mass(lo) < 1.0) lo *= 2.0;
  while (mass(hi) > 1.0) hi *= 2.0;
  for (int k = 0; k < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++k) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  // Exact multiplier on the identified active set.
  double num = 0.0, den = 0.0;
  const double lam0 = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] - lam0 * tau[i] > 0) {
      num += tau[i] * v[i];
      den += tau[i] * tau[i];
    }
  const double lam = den > 0 ? (num - 1.0) / den : lam0;
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(0.0, v[i] - lam * tau[i]);
  return w;
}

void finish_gap(CapacityReport& r) {
  if (std::isfinite(r.primal_value) && std::isfinite(r.dual_value))
    r.gap_rel = r.primal_value > 0 ? (r.primal_value - r.dual_value) / r.primal_value : 0.0;
}

// Linear maps of the boundary problem.
struct BoundaryOps {
  const Grid2D& g;
  const DirichletLaplacian& L;
  Vec rs, wr, bw;

  explicit BoundaryOps(const GridPtr& grid) : g(*grid), L(grid->laplacian()) {
    const RhoStar r = RhoStar::canonical(grid);
    rs = to_vec(r.field.values);
    const auto W = L.weights();
    const auto rho = g.rho();
    wr.resize(static_cast<Eigen::Index>(W.size()));
    for (std::size_t i = 0; i < W.size(); ++i) wr[static_cast<Eigen::Index>(i)] = W[i] * rho[i];
    bw.resize(static_cast<Eigen::Index>(g.boundary_count()));
    for (std::size_t j = 0; j < g.boundary_count(); ++j) bw[static_cast<Eigen::Index>(j)] = g.boundary_nodes()[j].weight;
  }

  Vec harmonic(const Vec& b) const { return L.solve_stiffness(L.coupling() * b); }
  Vec phi(const Vec& eta) const { return (L.stiffness() * rs.cwiseProduct(harmonic(eta))).cwiseQuotient(wr); }
  // (C^T (rho* H_eta))_j / w_j.
  Vec trace(const Vec& eta) const {
    return (L.coupling().transpose() * rs.cwiseProduct(harmonic(eta))).cwiseQuotient(bw);
  }

  Evaluation primal(const std::vector<double>& eta, bool grad) const {
    const Vec p = phi(to_vec(eta));
    const std::vector<double> pv = to_std(p), wv = to_std(wr);
    Evaluation e;
    if (!grad) {
      e.value = luxemburg_norm(pv, wv, NKind::Pstar);
      return e;
    }
    const NormGradient ng = luxemburg_norm_gradient(pv, wv, NKind::Pstar);
    e.value = ng.value;
    const Vec y = to_vec(ng.gradient).cwiseQuotient(wr);
    const Vec z = rs.cwiseProduct(L.stiffness() * y);
    e.gradient = to_std(L.coupling().transpose() * L.solve_stiffness(z));
    return e;
  }

  // Orlicz norm of the potential of masses w (full boundary vector).
  NormGradient potential_norm(const Vec& w) const {
    const Vec H = harmonic(w.cwiseQuotient(bw));
    return orlicz_norm(to_std(H), to_std(wr), NKind::P);
  }
};

void check_boundary_set(const Grid2D& g, const std::vector<int>& K) {
  for (int j : K)
    require(j >= 0 && static_cast<std::size_t>(j) < g.boundary_count(), ErrorCode::invalid_argument,
            "boundary node index out of range");
}

std::vector<int> boundary_with_margin(const Grid2D& g, const std::vector<int>& K, int margin) {
  std::set<int> s;
  const int B = static_cast<int>(g.boundary_count());
  for (int j : K)
    for (int d = -margin; d <= margin; ++d) s.insert(((j + d) % B + B) % B);
  return {s.begin(), s.end()};
}

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  const std::set<int> sb(b.begin(), b.end());
  return std::all_of(a.begin(), a.end(), [&](int x) { return sb.count(x) > 0; });
}

}  // namespace

// ---------------------------------------------------------------------------

RhoStar RhoStar::canonical(const GridPtr& grid) {
  RhoStar r;
  if (grid->kind() == DomainKind::unit_square) {
    const double pi = std::numbers::pi;
    r.field = ScalarField::from_function(grid, [pi](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y) / pi; });
  } else {
    r.field = ScalarField::from_function(grid, [](Point p) { return 0.5 * (1.0 - p.x * p.x - p.y * p.y); });
  }
  std::fill(r.field.boundary.begin(), r.field.boundary.end(), 0.0);
  return r;
}

RhoStarCheck check_rho_star(const RhoStar& rs, double band, double corner_exclusion) {
  const Grid2D& g = *rs.field.grid;
  RhoStarCheck c;
  c.positive = std::all_of(rs.field.values.begin(), rs.field.values.end(), [](double v) { return v > 0; });
  const auto lap = apply_laplacian(rs.field);
  c.min_neg_laplacian = std::numeric_limits<double>::infinity();
  for (double v : lap.values) c.min_neg_laplacian = std::min(c.min_neg_laplacian, -v);
  c.ratio_min = std::numeric_limits<double>::infinity();
  c.ratio_max = 0.0;
  const auto pts = g.interior_points();
  const auto rho = g.rho();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (rho[i] > band) continue;
    if (g.kind() == DomainKind::unit_square) {
      double dc = std::numeric_limits<double>::infinity();
      for (Point q : {Point{0, 0}, Point{1, 0}, Point{0, 1}, Point{1, 1}})
        dc = std::min(dc, std::hypot(pts[i].x - q.x, pts[i].y - q.y));
      if (dc < corner_exclusion) continue;
    }
    const double ratio = rs.field.values[i] / rho[i];
    c.ratio_min = std::min(c.ratio_min, ratio);
    c.ratio_max = std::max(c.ratio_max, ratio);
    ++c.checked;
  }
  return c;
}

double ndual_norm_of_eta(const GridPtr& grid, std::span<const double> eta) {
  require(eta.size() == grid->boundary_count(), ErrorCode::grid_mismatch, "eta needs one value per boundary node");
  const BoundaryOps ops(grid);
  return ops.primal({eta.begin(), eta.end()}, false).value;
}

NormGradient ndual_norm_of_eta_gradient(const GridPtr& grid, std::span<const double> eta) {
  require(eta.size() == grid->boundary_count(), ErrorCode::grid_mismatch, "eta needs one value per boundary node");
  const BoundaryOps ops(grid);
  const auto e = ops.primal({eta.begin(), eta.end()}, true);
  NormGradient ng;
  ng.value = e.value;
  ng.gradient = e.gradient;
  return ng;
}

CapacityReport boundary_capacity_primal(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt,
                                        std::span<const double> warm_eta) {
  check_boundary_set(*grid, K);
  CapacityReport r;
  r.K = K;
  const std::size_t B = grid->boundary_count();
  if (K.empty()) {
    r.primal_value = 0.0;
    r.eta.assign(B, 0.0);
    return r;
  }
  r.constrained = boundary_with_margin(*grid, K, opt.margin);
  std::vector<char> fixed(B, 0);
  for (int j : r.constrained) fixed[static_cast<std::size_t>(j)] = 1;
  auto proj = [&](std::vector<double> x) {
    for (std::size_t j = 0; j < B; ++j) x[j] = fixed[j] ? 1.0 : std::clamp(x[j], 0.0, 1.0);
    return x;
  };
  std::vector<double> x0(B, 0.0);
  if (!warm_eta.empty()) {
    require(warm_eta.size() == B, ErrorCode::grid_mismatch, "warm start has the wrong size");
    x0.assign(warm_eta.begin(), warm_eta.end());
  }
  const BoundaryOps ops(grid);
  auto out = projected_gradient([&](const std::vector<double>& x, bool grad) { return ops.primal(x, grad); }, proj, x0, opt);
  r.primal_value = out.value;
  r.eta = std::move(out.x);
  r.primal_trace = std::move(out.trace);
  r.primal_iterations = out.iterations;
  return r;
}

CapacityReport boundary_capacity_dual(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt,
                                      std::span<const double> warm_weights) {
  check_boundary_set(*grid, K);
  CapacityReport r;
  r.K = K;
  const std::size_t B = grid->boundary_count();
  r.weights.assign(B, 0.0);
  if (K.empty()) {
    r.dual_value = 0.0;
    return r;
  }
  r.constrained = boundary_with_margin(*grid, K, opt.margin);
  const BoundaryOps ops(grid);
  Vec chi = Vec::Zero(static_cast<Eigen::Index>(B));
  for (int j : r.constrained) chi[j] = 1.0;
  const Vec tau_full = ops.trace(chi);
  // Nodes whose trace vanishes (square corners) cannot carry dual mass.
  std::vector<int> support;
  std::vector<double> tau;
  for (int j : K)
    if (tau_full[j] > 0) {
      support.push_back(j);
      tau.push_back(tau_full[j]);
    }
  if (support.empty()) {
    r.dual_value = 0.0;
    return r;
  }
  auto expand = [&](const std::vector<double>& w) {
    Vec full = Vec::Zero(static_cast<Eigen::Index>(B));
    for (std::size_t k = 0; k < support.size(); ++k) full[support[k]] = w[k];
    return full;
  };
  auto f = [&](const std::vector<double>& w, bool grad) {
    const Vec full = expand(w);
    Evaluation e;
    const NormGradient ng = ops.potential_norm(full);
    e.value = ng.value;
    if (grad) {
      const Vec gH = to_vec(ng.gradient);
      const Vec gb = (ops.L.coupling().transpose() * ops.L.solve_stiffness(gH)).cwiseQuotient(ops.bw);
      e.gradient.resize(support.size());
      for (std::size_t k = 0; k < support.size(); ++k) e.gradient[k] = gb[support[k]];
    }
    return e;
  };
  auto proj = [&](const std::vector<double>& v) { return project_weighted_simplex(v, tau); };
  std::vector<double> w0(support.size(), 0.0);
  double t0 = 0.0;
  if (!warm_weights.empty()) {
    require(warm_weights.size() == B, ErrorCode::grid_mismatch, "warm start has the wrong size");
    for (std::size_t k = 0; k < support.size(); ++k) {
      w0[k] = std::max(0.0, warm_weights[static_cast<std::size_t>(support[k])]);
      t0 += tau[k] * w0[k];
    }
  }
  if (t0 > 0) {
    for (double& w : w0) w /= t0;
  } else {
    const double tsum = std::accumulate(tau.begin(), tau.end(), 0.0);
    std::fill(w0.begin(), w0.end(), 1.0 / tsum);
  }
  Outcome out;
  if (support.size() == 1) {
    out.x = w0;
    out.value = f(w0, false).value;
    out.trace = {out.value};
  } else {
    // Start from the warm point exactly (it already lies on the simplex), so the
    // projection does not perturb its value.
    out = projected_gradient(f, [&](const std::vector<double>& v) { return proj(v); }, w0, opt);
  }
  r.dual_value = 1.0 / out.value;
  // Dual measure: shape scaled to unit potential norm.
  const Vec wfull = expand(out.x) / out.value;
  r.weights = to_std(wfull);
  for (double v : out.trace) r.dual_trace.push_back(1.0 / v);
  r.dual_iterations = out.iterations;
  return r;
}

namespace {

void pair_boundary(const GridPtr& grid, CapacityReport& r) {
  finish_gap(r);
  if (r.K.empty()) return;
  const BoundaryOps ops(grid);
  const Vec w = to_vec(r.weights);
  const Vec H = ops.harmonic(w.cwiseQuotient(ops.bw));
  const Vec p = ops.phi(to_vec(r.eta));
  const double pairing = (ops.wr.cwiseProduct(H).cwiseProduct(p)).sum();
  const double nh = orlicz_norm(to_std(H), to_std(ops.wr), NKind::P).value;
  const double np = luxemburg_norm(to_std(p), to_std(ops.wr), NKind::Pstar);
  r.holder_slack = nh * np - std::abs(pairing);
}

}  // namespace

CapacityReport boundary_capacity(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt) {
  CapacityReport r = boundary_capacity_primal(grid, K, opt);
  const CapacityReport d = boundary_capacity_dual(grid, K, opt);
  r.dual_value = d.dual_value;
  r.weights = d.weights;
  r.dual_trace = d.dual_trace;
  r.dual_iterations = d.dual_iterations;
  pair_boundary(grid, r);
  return r;
}

std::vector<CapacityReport> nested_boundary_capacities(const GridPtr& grid, const std::vector<std::vector<int>>& family,
                                                       const CapacityOptions& opt) {
  for (std::size_t i = 1; i < family.size(); ++i)
    require(is_subset(family[i - 1], family[i]), ErrorCode::invalid_argument, "family must be nested increasing");
  std::vector<CapacityReport> out(family.size());
  std::vector<double> warm;
  for (std::size_t i = family.size(); i-- > 0;) {
    out[i] = boundary_capacity_primal(grid, family[i], opt, warm);
    warm = out[i].eta;
  }
  warm.clear();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const CapacityReport d = boundary_capacity_dual(grid, family[i], opt, warm);
    out[i].dual_value = d.dual_value;
    out[i].weights = d.weights;
    out[i].dual_trace = d.dual_trace;
    out[i].dual_iterations = d.dual_iterations;
    pair_boundary(grid, out[i]);
    warm = d.weights;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interior capacities

std::string to_string(InteriorVariant v) { return v == InteriorVariant::luxemburg ? "luxemburg" : "maximal_l1"; }

InteriorVariant interior_variant_from_string(const std::string& name) {
  if (name == "luxemburg") return InteriorVariant::luxemburg;
  if (name == "maximal_l1") return InteriorVariant::maximal_l1;
  fail(ErrorCode::config, "unknown interior capacity variant '" + name + "'");
}

std::vector<int> interior_nodes_in_box(const Grid2D& grid, Point lo, Point hi) {
  std::vector<int> out;
  const auto pts = grid.interior_points();
  const double e = 1e-12;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].x >= lo.x - e && pts[i].x <= hi.x + e && pts[i].y >= lo.y - e && pts[i].y <= hi.y + e)
      out.push_back(static_cast<int>(i));
  return out;
}

namespace {

struct InteriorSetup {
  std::vector<int> constrained;
  std::vector<char> state;  // 0 free, 1 fixed to one, 2 collar (fixed to zero)
};

InteriorSetup interior_setup(const Grid2D& g, const std::vector<int>& K, const CapacityOptions& opt) {
  const auto pts = g.interior_points();
  const auto rho = g.rho();
  const double h = g.h();
  for (int k : K) {
    require(k >= 0 && static_cast<std::size_t>(k) < pts.size(), ErrorCode::invalid_argument,
            "interior node index out of range");
    require(rho[static_cast<std::size_t>(k)] >= 4 * h - 1e-12, ErrorCode::domain,
            "interior capacity needs K at distance >= 4h from the boundary");
  }
  InteriorSetup s;
  s.state.assign(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (rho[i] <= opt.collar * h + 1e-12) s.state[i] = 2;
  const double reach = opt.margin * h * std::sqrt(2.0) * (1 + 1e-9);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k : K) {
      const Point q = pts[static_cast<std::size_t>(k)];
      if (std::hypot(pts[i].x - q.x, pts[i].y - q.y) <= reach) {
        require(s.state[i] != 2, ErrorCode::domain, "K plus margin meets the boundary collar");
        s.state[i] = 1;
        s.constrained.push_back(static_cast<int>(i));
        break;
      }
    }
  return s;
}

struct InteriorOps {
  const Grid2D& g;
  const DirichletLaplacian& L;
  Vec W;
  SparseMatrix B;                  // leaf overlaps (maximal variant)
  std::vector<double> leaf_weight;  // area of interior nodes per leaf

  InteriorOps(const GridPtr& grid, bool maximal) : g(*grid), L(grid->laplacian()), W(to_vec(grid->laplacian().weights())) {
    if (maximal) {
      B = dyadic_leaf_operator(g);
      const DyadicTree& t = g.dyadic();
      leaf_weight.assign(t.leaf_count(), 0.0);
      const auto pts = g.interior_points();
      for (std::size_t k = 0; k < pts.size(); ++k) leaf_weight[t.leaf_of(pts[k])] += W[static_cast<Eigen::Index>(k)];
    }
  }

  Vec neg_laplacian(const Vec& eta) const { return (L.stiffness() * eta).cwiseQuotient(W); }

  // sum_k W_k M[f](leaf(k)) with a subgradient from the maximizing ancestors.
  Evaluation maximal(const std::vector<double>& eta, bool grad) const {
    const DyadicTree& t = g.dyadic();
    const Vec f = neg_laplacian(to_vec(eta));
    const Vec m = B * f.cwiseAbs();
    const int D = t.depth;
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(D) + 1);
    sums[D].assign(m.data(), m.data() + m.size());
    for (int d = D - 1; d >= 0; --d) {
      const std::size_t Ld = std::size_t{1} << d, Lc = Ld * 2;
      sums[d].assign(Ld * Ld, 0.0);
      for (std::size_t iy = 0; iy < Lc; ++iy)
        for (std::size_t ix = 0; ix < Lc; ++ix) sums[d][(ix >> 1) + (iy >> 1) * Ld] += sums[d + 1][ix + iy * Lc];
    }
    std::vector<std::vector<double>> acc(static_cast<std::size_t>(D) + 1);
    for (int d = 0; d <= D; ++d) acc[d].assign(sums[d].size(), 0.0);
    Evaluation e;
    for (std::size_t leaf = 0; leaf < t.leaf_count(); ++leaf) {
      if (leaf_weight[leaf] == 0.0) continue;
      double best = 0.0;
      int bd = 0;
      double barea = 1.0;
      for (int d = 0; d <= D; ++d) {
        const double side = t.side / static_cast<double>(std::size_t{1} << d);
        const double v = sums[d][t.ancestor(leaf, d)] / (side * side);
        if (v > best) {
          best = v;
          bd = d;
          barea = side * side;
        }
      }
      e.value += leaf_weight[leaf] * best;
      if (grad && best > 0) acc[bd][t.ancestor(leaf, bd)] += leaf_weight[leaf] / barea;
    }
    if (!grad) return e;
    Vec gamma(static_cast<Eigen::Index>(t.leaf_count()));
    for (std::size_t leaf = 0; leaf < t.leaf_count(); ++leaf) {
      double s = 0.0;
      for (int d = 0; d <= D; ++d) s += acc[d][t.ancestor(leaf, d)];
      gamma[static_cast<Eigen::Index>(leaf)] = s;
    }
    Vec gf = B.transpose() * gamma;
    for (Eigen::Index i = 0; i < gf.size(); ++i) gf[i] *= f[i] > 0 ? 1.0 : (f[i] < 0 ? -1.0 : 0.0);
    e.gradient = to_std(L.stiffness() * gf.cwiseQuotient(W));
    return e;
  }
};

}  // namespace

CapacityReport interior_capacity_primal(const GridPtr& grid, const std::vector<int>& K, InteriorVariant variant,
                                        const CapacityOptions& opt, std::span<const double> warm_eta) {
  CapacityReport r;
  r.K = K;
  const std::size_t N = grid->interior_count();
  if (K.empty()) {
    r.primal_value = 0.0;
    r.eta.assign(N, 0.0);
    return r;
  }
  const InteriorSetup s = interior_setup(*grid, K, opt);
  r.constrained = s.constrained;
  auto proj = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < N; ++i) x[i] = s.state[i] == 1 ? 1.0 : s.state[i] == 2 ? 0.0 : std::clamp(x[i], 0.0, 1.0);
    return x;
  };
  std::vector<double> x0(N, 0.0);
  if (!warm_eta.empty()) {
    require(warm_eta.size() == N, ErrorCode::grid_mismatch, "warm start has the wrong size");
    x0.assign(warm_eta.begin(), warm_eta.end());
  }
  const InteriorOps ops(grid, variant == InteriorVariant::maximal_l1);
  const Vec Winv = ops.W.cwiseInverse();
  const SparseMatrix Lam = Winv.asDiagonal() * grid->laplacian().stiffness();
  LevelNewton solver(Lam, ops.W, s.state);
  Outcome out = solver.run(x0, opt);
  if (variant == InteriorVariant::maximal_l1) {
    // Refine the better of the warm start and the Luxemburg minimizer.
    auto J = [&](const std::vector<double>& x, bool g) { return ops.maximal(x, g); };
    std::vector<double> start = out.x;
    if (!warm_eta.empty()) {
      const auto w = proj(x0);
      if (J(w, false).value < J(start, false).value) start = w;
    }
    out = projected_subgradient(J, proj, start, opt);
  }
  r.primal_value = out.value;
  r.eta = std::move(out.x);
  r.primal_trace = std::move(out.trace);
  r.primal_iterations = out.iterations;
  r.stagnated = out.stagnated;
  if (out.stagnated) r.message = "no improvement over the stagnation window; best feasible value returned";
  return r;
}

CapacityReport interior_capacity_dual(const GridPtr& grid, const std::vector<int>& K, const CapacityOptions& opt,
                                      std::span<const double> warm_weights) {
  CapacityReport r;
  r.K = K;
  const std::size_t N = grid->interior_count();
  r.weights.assign(N, 0.0);
  if (K.empty()) {
    r.dual_value = 0.0;
    return r;
  }
  interior_setup(*grid, K, opt);
  const DirichletLaplacian& L = grid->laplacian();
  const std::vector<double> W(L.weights().begin(), L.weights().end());
  auto expand = [&](const std::vector<double>& m) {
    Vec full = Vec::Zero(static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < K.size(); ++k) full[K[k]] = m[k];
    return full;
  };
  auto f = [&](const std::vector<double>& m, bool grad) {
    const Vec G = L.solve_stiffness(expand(m));
    const NormGradient ng = orlicz_norm(to_std(G), W, NKind::P);
    Evaluation e;
    e.value = ng.value;
    if (grad) {
      const Vec gm = L.solve_stiffness(to_vec(ng.gradient));
      e.gradient.resize(K.size());
      for (std::size_t k = 0; k < K.size(); ++k) e.gradient[k] = gm[K[k]];
    }
    return e;
  };
  const std::vector<double> ones(K.size(), 1.0);
  std::vector<double> m0(K.size(), 1.0 / static_cast<double>(K.size()));
  if (!warm_weights.empty()) {
    require(warm_weights.size() == N, ErrorCode::grid_mismatch, "warm start has the wrong size");
    double t = 0.0;
    for (std::size_t k = 0; k < K.size(); ++k) t += std::max(0.0, warm_weights[static_cast<std::size_t>(K[k])]);
    if (t > 0)
      for (std::size_t k = 0; k < K.size(); ++k) m0[k] = std::max(0.0, warm_weights[static_cast<std::size_t>(K[k])]) / t;
  }
  Outcome out;
  if (K.size() == 1) {
    out.x = m0;
    out.value = f(m0, false).value;
    out.trace = {out.value};
  } else {
    out = projected_gradient(f, [&](const std::vector<double>& v) { return project_weighted_simplex(v, ones); }, m0, opt);
  }
  r.dual_value = 1.0 / out.value;
  r.weights = to_std(expand(out.x) / out.value);
  for (double v : out.trace) r.dual_trace.push_back(1.0 / v);
  r.dual_iterations = out.iterations;
  return r;
}

namespace {

void pair_interior(const GridPtr& grid, CapacityReport& r) {
  finish_gap(r);
  if (r.K.empty()) return;
  const DirichletLaplacian& L = grid->laplacian();
  const Vec W = to_vec(L.weights());
  const Vec G = L.solve_stiffness(to_vec(r.weights));
  const Vec f = (L.stiffness() * to_vec(r.eta)).cwiseQuotient(W);
  const double pairing = W.cwiseProduct(G).cwiseProduct(f).sum();
  const double ng = orlicz_norm(to_std(G), to_std(W), NKind::P).value;
  const double nf = luxemburg_norm(to_std(f), to_std(W), NKind::Pstar);
  r.holder_slack = ng * nf - std::abs(pairing);
}

}  // namespace

CapacityReport interior_capacity(const GridPtr& grid, const std::vector<int>& K, InteriorVariant variant,
                                 const CapacityOptions& opt) {
  CapacityReport r = interior_capacity_primal(grid, K, variant, opt);
  // The dual pairs with the Luxemburg variant only.
  if (variant != InteriorVariant::luxemburg) return r;
  const CapacityReport d = interior_capacity_dual(grid, K, opt);
  r.dual_value = d.dual_value;
  r.weights = d.weights;
  r.dual_trace = d.dual_trace;
  r.dual_iterations = d.dual_iterations;
  pair_interior(grid, r);
  return r;
}

std::vector<CapacityReport> nested_interior_capacities(const GridPtr& grid, const std::vector<std::vector<int>>& family,
                                                       InteriorVariant variant, const CapacityOptions& opt) {
  for (std::size_t i = 1; i < family.size(); ++i)
    require(is_subset(family[i - 1], family[i]), ErrorCode::invalid_argument, "family must be nested increasing");
  std::vector<CapacityReport> out(family.size());
  std::vector<double> warm;
  for (std::size_t i = family.size(); i-- > 0;) {
    out[i] = interior_capacity_primal(grid, family[i], variant, opt, warm);
    warm = out[i].eta;
  }
  if (variant != InteriorVariant::luxemburg) return out;
  warm.clear();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const CapacityReport d = interior_capacity_dual(grid, family[i], opt, warm);
    out[i].dual_value = d.dual_value;
    out[i].weights = d.weights;
    out[i].dual_trace = d.dual_trace;
    out[i].dual_iterations = d.dual_iterations;
    pair_interior(grid, out[i]);
    warm = d.weights;
  }
  return out;
}

// ---------------------------------------------------------------------------

VanishingReport vanishing_test(const GridPtr& grid, const BoundaryMeasure& mu, const std::vector<std::vector<int>>& family,
                               const CapacityOptions& opt) {
  VanishingReport rep;
  const auto masses = discretize_boundary(mu, *grid);
  const SolveReport sol = truncation_scheme(grid, mu);
  const ScalarField& u = sol.u;
  rep.u_max = u.max_abs();
  const BoundaryOps ops(grid);
  const Nonlinearity g;
  const Vec b = to_vec(u.boundary);
  Vec gu(static_cast<Eigen::Index>(u.values.size()));
  for (std::size_t i = 0; i < u.values.size(); ++i) gu[static_cast<Eigen::Index>(i)] = g.g(u.values[i]);
  const Vec W = to_vec(grid->laplacian().weights());
  const double norm_u = orlicz_norm(u.values, to_std(ops.wr), NKind::P).value;
  std::vector<double> warm;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (i > 0 && !is_subset(family[i], family[i - 1])) warm.clear();
    const CapacityReport c = boundary_capacity_primal(grid, family[i], opt, warm);
    warm = c.eta;
    VanishingEntry e;
    e.capacity = c.primal_value;
    e.mass = measure_of_set(masses, family[i]);
    e.norm_u = norm_u;
    if (!family[i].empty()) {
      const Vec eta = to_vec(c.eta);
      const Vec psi = ops.rs.cwiseProduct(ops.harmonic(eta));
      const Vec ct = ops.L.coupling().transpose() * psi;
      e.pairing = b.dot(ct);
      e.absorption = W.cwiseProduct(gu).dot(psi);
      for (int j : family[i]) e.weighted_mass += masses[static_cast<std::size_t>(j)] * ct[j] / ops.bw[j];
    }
    e.bound = e.absorption + e.norm_u * e.capacity;
    rep.entries.push_back(e);
  }
  return rep;
}

double q_function(double r) {
  const double a = std::abs(r);
  return (a + 0.5) * std::log1p(2 * a) - a;
}

QBound q_bound_check(std::span<const double> r_samples) {
  QBound q;
  q.min_q = std::numeric_limits<double>::infinity();
  for (double r : r_samples) {
    require(std::abs(r) <= 1e6, ErrorCode::range, "q_bound_check samples must lie in [-1e6, 1e6]");
    const double Q = q_function(r);
    q.min_q = std::min(q.min_q, Q);
    const double a = std::abs(r);
    if (a == 0.0) continue;
    const double ref = a * std::log1p(a);
    q.max_ratio = std::max(q.max_ratio, Q / ref);
    q.max_violation = std::max(q.max_violation, Q - 3.0 * ref);
  }
  q.holds = q.min_q >= 0.0 && q.max_violation <= 0.0;
  return q;
}

}  // namespace semilab
