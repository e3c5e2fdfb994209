#include "semilab/solver.hpp"

#include "semilab/error.hpp"
#include "semilab/orlicz.hpp"
#include "semilab/potentials.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace semilab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity Nonlinearity::power(double q) {
  require(q > 1.0, ErrorCode::invalid_argument, "power nonlinearity needs q > 1");
  Nonlinearity g;
  g.kind = Kind::power;
  g.q = q;
  return g;
}

double Nonlinearity::g(double u) const {
  if (kind == Kind::exp) return u > kExpGuard ? kInf : std::expm1(u);
  return std::copysign(std::pow(std::abs(u), q), u);
}

double Nonlinearity::g_prime(double u) const {
  if (kind == Kind::exp) return u > kExpGuard ? kInf : std::exp(u);
  return q * std::pow(std::abs(u), q - 1.0);
}

std::string Nonlinearity::name() const {
  if (kind == Kind::exp) return "exp";
  std::ostringstream os;
  os << "power(" << q << ")";
  return os.str();
}

Nonlinearity nonlinearity_from_string(const std::string& name, double q) {
  if (name == "exp") return Nonlinearity::exponential();
  if (name == "power") return Nonlinearity::power(q);
  fail(ErrorCode::config, "unknown nonlinearity '" + name + "'");
}

// ---------------------------------------------------------------------------
// Newton solver

namespace {

class NewtonSystem {
 public:
  NewtonSystem(const DirichletProblem& p, const Nonlinearity& g) : grid_(*p.grid), L_(p.grid->laplacian()), g_(g) {
    const auto N = grid_.interior_count();
    const auto W = L_.weights();
    cb_.assign(N, 0.0);
    if (!p.boundary_values.empty()) {
      Eigen::Map<const Eigen::VectorXd> b(p.boundary_values.data(), static_cast<Eigen::Index>(p.boundary_values.size()));
      Eigen::VectorXd c = L_.coupling() * b;
      Eigen::VectorXd ac = L_.coupling().cwiseAbs() * b.cwiseAbs();
      cb_.assign(c.data(), c.data() + c.size());
      abs_cb_.assign(ac.data(), ac.data() + ac.size());
    } else {
      abs_cb_.assign(N, 0.0);
    }
    wf_.assign(N, 0.0);
    if (!p.source.empty())
      for (std::size_t i = 0; i < N; ++i) wf_[i] = W[i] * p.source[i];
    fixed_.assign(N, 0);
    for (int k : p.fixed_nodes) fixed_[static_cast<std::size_t>(k)] = 1;

    jac_ = L_.stiffness();
    jac_.makeCompressed();
    ldlt_.analyzePattern(jac_);
  }

  // Weighted residual F; returns false when g overflows.
  bool residual(const std::vector<double>& u, std::vector<double>& F) const {
    const auto W = L_.weights();
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::VectorXd Au = L_.stiffness() * uv;
    F.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (fixed_[i]) {
        F[i] = 0.0;
        continue;
      }
      const double gi = g_.g(u[i]);
      if (!std::isfinite(gi)) return false;
      F[i] = Au[static_cast<Eigen::Index>(i)] - cb_[i] + W[i] * gi - wf_[i];
    }
    return true;
  }

  // Largest |F_i| relative to the magnitude of the terms that produced it.
  double relative_floor(const std::vector<double>& u, const std::vector<double>& F) const {
    const auto W = L_.weights();
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::VectorXd s = L_.stiffness().cwiseAbs() * uv.cwiseAbs();
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (fixed_[i]) continue;
      const double scale = s[static_cast<Eigen::Index>(i)] + abs_cb_[i] + W[i] * std::abs(g_.g(u[i])) + std::abs(wf_[i]);
      if (scale > 0) worst = std::max(worst, std::abs(F[i]) / scale);
    }
    return worst;
  }

  double unweighted_inf(const std::vector<double>& F) const {
    const auto W = L_.weights();
    double m = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) m = std::max(m, std::abs(F[i]) / W[i]);
    return m;
  }

  double unweighted_l2(const std::vector<double>& F) const {
    const auto W = L_.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) s += (F[i] / W[i]) * (F[i] / W[i]);
    return std::sqrt(s);
  }

  // Newton direction -J^{-1} F.
  std::vector<double> direction(const std::vector<double>& u, const std::vector<double>& F) {
    const auto W = L_.weights();
    const SparseMatrix& A = L_.stiffness();
    for (int col = 0; col < jac_.outerSize(); ++col) {
      SparseMatrix::InnerIterator ja(jac_, col);
      for (SparseMatrix::InnerIterator it(A, col); it; ++it, ++ja) {
        const auto r = static_cast<std::size_t>(it.row()), c = static_cast<std::size_t>(it.col());
        double v = it.value();
        if (fixed_[r] || fixed_[c])
          v = r == c ? 1.0 : 0.0;
        else if (r == c)
          v += W[r] * g_.g_prime(u[r]);
        ja.valueRef() = v;
      }
    }
    ldlt_.factorize(jac_);
    require(ldlt_.info() == Eigen::Success, ErrorCode::internal, "Newton Jacobian factorization failed");
    Eigen::Map<const Eigen::VectorXd> f(F.data(), static_cast<Eigen::Index>(F.size()));
    Eigen::VectorXd d = -ldlt_.solve(f);
    return {d.data(), d.data() + d.size()};
  }

 private:
  const Grid2D& grid_;
  const DirichletLaplacian& L_;
  Nonlinearity g_;
  std::vector<double> cb_, abs_cb_, wf_;
  std::vector<char> fixed_;
  SparseMatrix jac_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

SolveReport solve_dirichlet(const DirichletProblem& p, const Nonlinearity& g, const SolveOptions& opt) {
  require(p.grid != nullptr, ErrorCode::invalid_argument, "problem has no grid");
  const Grid2D& grid = *p.grid;
  const std::size_t N = grid.interior_count();
  require(p.boundary_values.empty() || p.boundary_values.size() == grid.boundary_count(), ErrorCode::grid_mismatch,
          "boundary data have the wrong size");
  require(p.source.empty() || p.source.size() == N, ErrorCode::grid_mismatch, "source has the wrong size");
  require(p.fixed_nodes.size() == p.fixed_values.size(), ErrorCode::invalid_argument,
          "fixed_nodes and fixed_values differ in length");

  SolveReport rep;
  const std::vector<double> bvals = p.boundary_values.empty() ? std::vector<double>(grid.boundary_count(), 0.0)
                                                              : p.boundary_values;
  rep.lift = harmonic_extension(p.grid, bvals);

  std::vector<double> u(N);
  if (!p.initial.empty()) {
    require(p.initial.size() == N, ErrorCode::grid_mismatch, "initial iterate has the wrong size");
    u = p.initial;
  } else {
    const auto rho = grid.rho();
    for (std::size_t i = 0; i < N; ++i) {
      u[i] = rep.lift.values[i];
      if (opt.barrier_start && g.kind == Nonlinearity::Kind::exp)
        u[i] = std::min(u[i], std::log(2.0 / (rho[i] * rho[i])));
    }
  }
  for (std::size_t k = 0; k < p.fixed_nodes.size(); ++k) u[static_cast<std::size_t>(p.fixed_nodes[k])] = p.fixed_values[k];

  NewtonSystem sys(p, g);
  std::vector<double> F, Ft, ut(N);
  auto finish = [&](bool converged) {
    rep.converged = converged;
    rep.u = ScalarField::zeros(p.grid);
    rep.u.values = u;
    rep.u.boundary = bvals;
    for (double x : u)
      if (g.kind == Nonlinearity::Kind::exp && x > kExpGuard) rep.saturated = true;
    rep.u.blowup_record = rep.saturated;
  };

  if (!sys.residual(u, F)) {
    rep.saturated = true;
    rep.message = "exponential guard tripped at the initial iterate";
    finish(false);
    rep.saturated = true;
    rep.u.blowup_record = true;
    return rep;
  }
  double rinf = sys.unweighted_inf(F);
  rep.residual_trace.push_back(rinf);
  rep.residual_inf = rinf;
  if (rinf <= opt.tolerance) {
    finish(true);
    return rep;
  }

  for (int it = 1; it <= opt.max_newton; ++it) {
    const auto d = sys.direction(u, F);
    const double m0 = sys.unweighted_l2(F);
    double t = 1.0;
    bool accepted = false, overflow_only = true;
    for (int halving = 0; halving <= opt.max_halvings; ++halving, t *= 0.5) {
      for (std::size_t i = 0; i < N; ++i) ut[i] = u[i] + t * d[i];
      if (!sys.residual(ut, Ft)) continue;
      overflow_only = false;
      if (sys.unweighted_l2(Ft) <= (1.0 - 1e-4 * t) * m0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (sys.relative_floor(u, F) <= 64.0 * kEps) {
        rep.roundoff_floor = true;
        rep.message = "residual at floating-point floor";
        finish(true);
        return rep;
      }
      if (overflow_only) {
        rep.saturated = true;
        rep.message = "exponential guard tripped on every trial step";
        finish(false);
        rep.saturated = true;
        rep.u.blowup_record = true;
        return rep;
      }
      std::ostringstream os;
      os << "Newton stagnated after " << it - 1 << " steps; residual trace:";
      for (double r : rep.residual_trace) os << ' ' << r;
      rep.message = os.str();
      finish(false);
      if (opt.throw_on_failure) fail(ErrorCode::nonconvergence, rep.message);
      return rep;
    }
    double step = 0.0;
    for (std::size_t i = 0; i < N; ++i) step = std::max(step, std::abs(ut[i] - u[i]));
    u.swap(ut);
    F.swap(Ft);
    const double prev = rinf;
    rinf = sys.unweighted_inf(F);
    rep.residual_trace.push_back(rinf);
    rep.quadratic_ratios.push_back(rinf / (prev * prev));
    rep.newton_iters = it;
    rep.residual_inf = rinf;
    if (rinf <= opt.tolerance) {
      finish(true);
      return rep;
    }
    if (step <= 1e-12 * (1.0 + inf_norm(u)) && sys.relative_floor(u, F) <= 64.0 * kEps) {
      rep.roundoff_floor = true;
      rep.message = "residual at floating-point floor";
      finish(true);
      return rep;
    }
  }
  std::ostringstream os;
  os << "Newton did not converge in " << opt.max_newton << " steps; residual trace:";
  for (double r : rep.residual_trace) os << ' ' << r;
  rep.message = os.str();
  finish(false);
  if (opt.throw_on_failure) fail(ErrorCode::nonconvergence, rep.message);
  return rep;
}

DirichletProblem problem_from_measure(const GridPtr& grid, const BoundaryMeasure& mu, std::span<const double> source) {
  DirichletProblem p;
  p.grid = grid;
  p.boundary_masses = discretize_boundary(mu, *grid);
  p.boundary_values = boundary_density_values(p.boundary_masses, *grid);
  p.source.assign(source.begin(), source.end());
  return p;
}

ScalarField zeta0(const GridPtr& grid) {
  ScalarField z = ScalarField::zeros(grid);
  const auto t = grid->torsion();
  z.values.assign(t.begin(), t.end());
  return z;
}

EnergyIdentity energy_identity(const ScalarField& u, std::span<const double> source, const Nonlinearity& g) {
  const Grid2D& grid = *u.grid;
  const auto W = grid.laplacian().weights();
  const auto z = grid.torsion();
  EnergyIdentity e;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    e.lhs += W[i] * (u.values[i] + g.g(u.values[i]) * z[i]);
    if (!source.empty()) e.rhs += W[i] * source[i] * z[i];
  }
  if (u.has_boundary()) {
    const auto ct = grid.laplacian().coupling_transpose(z);
    for (std::size_t j = 0; j < ct.size(); ++j) e.rhs += u.boundary[j] * ct[j];
  }
  return e;
}

SolveReport solve_dirichlet(const GridPtr& grid, const BoundaryMeasure& mu, const Nonlinearity& g,
                            std::span<const double> source, const SolveOptions& opt) {
  const DirichletProblem p = problem_from_measure(grid, mu, source);
  SolveReport rep = solve_dirichlet(p, g, opt);
  if (rep.converged) {
    const auto e = energy_identity(rep.u, p.source, g);
    rep.energy_lhs = e.lhs;
    rep.energy_rhs = e.rhs;
    rep.mass_balance = std::abs(e.lhs - e.rhs);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Weak residual

namespace {

std::size_t closed_index(int n, int i, int j) { return static_cast<std::size_t>(i + j * (n + 2)); }

}  // namespace

std::vector<TestFunction> test_battery(const GridPtr& grid, Battery which) {
  require(grid->kind() == DomainKind::unit_square, ErrorCode::invalid_argument, "test battery is defined on the square");
  const int n = grid->n();
  const double h = grid->h();
  std::vector<TestFunction> out;
  TestFunction z{"zeta0", std::vector<double>(static_cast<std::size_t>((n + 2) * (n + 2)), 0.0)};
  const auto t = grid->torsion();
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) z.closed[closed_index(n, i, j)] = t[static_cast<std::size_t>(grid->square_index(i, j))];
  out.push_back(std::move(z));
  if (which == Battery::zeta0_only) return out;
  const double pi = std::numbers::pi;
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b) {
      TestFunction f{a == 1 && b == 1 ? "phi1" : "sin" + std::to_string(a) + std::to_string(b),
                     std::vector<double>(static_cast<std::size_t>((n + 2) * (n + 2)), 0.0)};
      for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= n; ++i) f.closed[closed_index(n, i, j)] = std::sin(a * pi * i * h) * std::sin(b * pi * j * h);
      out.push_back(std::move(f));
    }
  return out;
}

double weak_residual(const ScalarField& u, std::span<const double> masses, const Nonlinearity& g,
                     const std::vector<TestFunction>& battery, std::span<const double> source) {
  const Grid2D& grid = *u.grid;
  require(grid.kind() == DomainKind::unit_square, ErrorCode::invalid_argument, "weak residual is defined on the square");
  require(u.has_boundary(), ErrorCode::missing_boundary, "weak residual needs boundary values of u");
  const int n = grid.n();
  const double h = grid.h();
  const int M = n + 2;
  // Closed-grid samples of u.
  std::vector<double> U(static_cast<std::size_t>(M * M));
  for (int j = 0; j < M; ++j)
    for (int i = 0; i < M; ++i) {
      const bool inside = i >= 1 && i <= n && j >= 1 && j <= n;
      U[closed_index(n, i, j)] = inside ? u.values[static_cast<std::size_t>(grid.square_index(i, j))]
                                        : u.boundary[static_cast<std::size_t>(grid.square_boundary_index(i, j))];
    }
  auto trap = [&](int i) { return (i == 0 || i == n + 1) ? 0.5 : 1.0; };
  const auto nodes = grid.boundary_nodes();
  double worst = 0.0;
  std::vector<double> lap(static_cast<std::size_t>(M * M));
  for (const TestFunction& tf : battery) {
    const auto& Z = tf.closed;
    auto z = [&](int i, int j) { return Z[closed_index(n, i, j)]; };
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i)
        lap[closed_index(n, i, j)] = (z(i + 1, j) + z(i - 1, j) + z(i, j + 1) + z(i, j - 1) - 4 * z(i, j)) / (h * h);
    auto L = [&](int i, int j) -> double& { return lap[closed_index(n, i, j)]; };
    for (int t = 1; t <= n; ++t) {
      L(0, t) = 2 * L(1, t) - L(2, t);
      L(n + 1, t) = 2 * L(n, t) - L(n - 1, t);
      L(t, 0) = 2 * L(t, 1) - L(t, 2);
      L(t, n + 1) = 2 * L(t, n) - L(t, n - 1);
    }
    L(0, 0) = 2 * L(1, 1) - L(2, 2);
    L(n + 1, 0) = 2 * L(n, 1) - L(n - 1, 2);
    L(0, n + 1) = 2 * L(1, n) - L(2, n - 1);
    L(n + 1, n + 1) = 2 * L(n, n) - L(n - 1, n - 1);

    double volume = 0.0;
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i) {
        const double w = trap(i) * trap(j) * h * h;
        const double zi = z(i, j);
        double term = -U[closed_index(n, i, j)] * L(i, j);
        if (zi != 0.0) {
          term += g.g(U[closed_index(n, i, j)]) * zi;
          if (!source.empty()) term -= source[static_cast<std::size_t>(grid.square_index(i, j))] * zi;
        }
        volume += w * term;
      }
    double flux = 0.0;
    // One-sided second-order outward derivative (3 zeta_b - 4 zeta_1 + zeta_2) / 2h with zeta_b = 0.
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      if (nodes[b].inner1 < 0 || masses[b] == 0.0) continue;
      const Point p1 = grid.interior_points()[static_cast<std::size_t>(nodes[b].inner1)];
      const Point p2 = grid.interior_points()[static_cast<std::size_t>(nodes[b].inner2)];
      const int i1 = static_cast<int>(std::lround(p1.x / h)), j1 = static_cast<int>(std::lround(p1.y / h));
      const int i2 = static_cast<int>(std::lround(p2.x / h)), j2 = static_cast<int>(std::lround(p2.y / h));
      flux += masses[b] * (-4.0 * z(i1, j1) + z(i2, j2)) / (2.0 * h);
    }
    double zmax = 0.0, gmax = 0.0, lmax = 0.0;
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i) {
        zmax = std::max(zmax, std::abs(z(i, j)));
        lmax = std::max(lmax, std::abs(L(i, j)));
        if (i + 1 < M) gmax = std::max(gmax, std::abs(z(i + 1, j) - z(i, j)) / h);
        if (j + 1 < M) gmax = std::max(gmax, std::abs(z(i, j + 1) - z(i, j)) / h);
      }
    const double norm = zmax + gmax + lmax;
    if (norm > 0) worst = std::max(worst, std::abs(volume + flux) / norm);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Truncation scheme and checks

std::vector<double> default_k_schedule() {
  std::vector<double> k;
  for (int e = 0; e <= 10; ++e) k.push_back(std::ldexp(1.0, e));
  return k;
}

namespace {

std::vector<int> probe_nodes(const Grid2D& grid, const std::vector<Point>& probes) {
  std::vector<int> out;
  for (const Point& p : probes) out.push_back(grid.nearest_interior_nodes(p).front());
  return out;
}

}  // namespace

SolveReport truncation_scheme(const GridPtr& grid, const BoundaryMeasure& mu, const TruncationOptions& topt,
                              const Nonlinearity& g, const SolveOptions& opt) {
  require(!topt.k_schedule.empty(), ErrorCode::invalid_argument, "k schedule is empty");
  for (std::size_t i = 1; i < topt.k_schedule.size(); ++i)
    require(topt.k_schedule[i] > topt.k_schedule[i - 1], ErrorCode::invalid_argument, "k schedule must increase");
  const Decomposition parts = lebesgue_decompose(mu);
  const auto probes = probe_nodes(*grid, topt.probes);
  SolveReport last;
  std::vector<double> prev_masses;
  std::vector<TruncationStep> trace;
  bool have_prev = false;
  for (double k : topt.k_schedule) {
    const BoundaryMeasure mu_k = recombine({parts.singular, truncate_regular(parts.regular, k)});
    const DirichletProblem p = problem_from_measure(grid, mu_k);
    TruncationStep step;
    step.k = k;
    if (have_prev && p.boundary_masses == prev_masses) {
      step.reused = true;
    } else {
      DirichletProblem warm = p;
      if (have_prev) warm.initial = last.u.values;
      SolveReport cur = solve_dirichlet(warm, g, opt);
      require(cur.converged, ErrorCode::nonconvergence, "truncation step did not converge: " + cur.message);
      const auto e = energy_identity(cur.u, {}, g);
      cur.energy_lhs = e.lhs;
      cur.energy_rhs = e.rhs;
      cur.mass_balance = std::abs(e.lhs - e.rhs);
      if (have_prev) {
        for (std::size_t i = 0; i < cur.u.values.size(); ++i)
          if (cur.u.values[i] < last.u.values[i] - topt.monotone_tolerance) {
            std::ostringstream os;
            os << "truncation iterates decreased at node " << i << " for k = " << k << " by "
               << last.u.values[i] - cur.u.values[i];
            fail(ErrorCode::consistency, os.str());
          }
      }
      last = std::move(cur);
    }
    step.newton_iters = step.reused ? 0 : last.newton_iters;
    step.energy_gap = last.mass_balance;
    for (double m : p.boundary_masses) step.mass += m;
    for (int idx : probes) step.probe_values.push_back(last.u.values[static_cast<std::size_t>(idx)]);
    step.max_u = last.u.max_abs();
    step.integral_u = integrate(last.u);
    trace.push_back(step);
    prev_masses = p.boundary_masses;
    have_prev = true;
  }
  last.truncation_trace = std::move(trace);
  return last;
}

ComparisonResult comparison_check(const GridPtr& grid, const BoundaryMeasure& mu_small, const BoundaryMeasure& mu_big,
                                  const Nonlinearity& g, const SolveOptions& opt) {
  ComparisonResult r;
  r.small = solve_dirichlet(grid, mu_small, g, {}, opt);
  r.big = solve_dirichlet(grid, mu_big, g, {}, opt);
  r.max_violation = -kInf;
  for (std::size_t i = 0; i < r.small.u.values.size(); ++i)
    r.max_violation = std::max(r.max_violation, r.small.u.values[i] - r.big.u.values[i]);
  r.ordered = r.max_violation <= 1e-10;
  return r;
}

LimitCheck increasing_limit_check(const GridPtr& grid, const std::vector<BoundaryMeasure>& sequence,
                                  const BoundaryMeasure& limit, const Nonlinearity& g, const SolveOptions& opt) {
  require(!sequence.empty(), ErrorCode::invalid_argument, "measure sequence is empty");
  LimitCheck out;
  const DirichletProblem plim = problem_from_measure(grid, limit);
  {
    const auto ct = grid->laplacian().coupling_transpose(grid->torsion());
    for (std::size_t j = 0; j < ct.size(); ++j) out.bound += plim.boundary_values[j] * ct[j];
  }
  out.nondecreasing = true;
  out.bound_holds = true;
  std::vector<double> prev;
  std::vector<double> prev_masses;
  for (const auto& mu : sequence) {
    const DirichletProblem p = problem_from_measure(grid, mu);
    if (!prev_masses.empty())
      for (std::size_t b = 0; b < p.boundary_masses.size(); ++b)
        require(p.boundary_masses[b] >= prev_masses[b] - 1e-15, ErrorCode::invalid_argument,
                "measure sequence is not nodewise nondecreasing");
    const SolveReport r = solve_dirichlet(p, g, opt);
    const auto e = energy_identity(r.u, {}, g);
    out.lhs.push_back(e.lhs);
    if (e.lhs > out.bound + 1e-9 * (1.0 + std::abs(out.bound))) out.bound_holds = false;
    if (!prev.empty()) {
      const auto W = grid->laplacian().weights();
      double inc = 0.0;
      for (std::size_t i = 0; i < prev.size(); ++i) {
        inc += W[i] * (r.u.values[i] - prev[i]);
        if (r.u.values[i] < prev[i] - 1e-10) out.nondecreasing = false;
      }
      out.increments.push_back(inc);
    }
    prev = r.u.values;
    prev_masses = p.boundary_masses;
  }
  const SolveReport rl = solve_dirichlet(plim, g, opt);
  const auto W = grid->laplacian().weights();
  for (std::size_t i = 0; i < prev.size(); ++i) out.l1_to_limit += W[i] * std::abs(prev[i] - rl.u.values[i]);
  return out;
}

namespace {

BarrierFit fit_barrier(const ScalarField& u, const std::vector<double>& X, const std::vector<char>& use) {
  BarrierFit f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (!use[i]) continue;
    ++f.samples;
    sx += X[i];
    sy += u.values[i];
    sxx += X[i] * X[i];
    sxy += X[i] * u.values[i];
  }
  if (f.samples < 2) return f;
  const double m = f.samples;
  const double det = m * sxx - sx * sx;
  if (std::abs(det) > 1e-300) {
    f.C = (m * sxy - sx * sy) / det;
    f.D = (sy - f.C * sx) / m;
  } else {
    f.D = sy / m;
  }
  f.envelope_D = -kInf;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (!use[i]) continue;
    f.max_violation = std::max(f.max_violation, u.values[i] - (f.C * X[i] + f.D));
    f.envelope_D = std::max(f.envelope_D, u.values[i] - f.C * X[i]);
  }
  return f;
}

}  // namespace

BarrierFit keller_osserman_probe(const ScalarField& u, const std::vector<Point>& K) {
  const Grid2D& grid = *u.grid;
  const auto pts = grid.interior_points();
  std::vector<double> X(pts.size(), 0.0);
  std::vector<char> use(pts.size(), 0);
  if (K.empty()) return {};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double d = kInf;
    for (const Point& k : K) d = std::min(d, std::hypot(pts[i].x - k.x, pts[i].y - k.y));
    if (d >= 2 * grid.h() && d <= 0.3) {
      use[i] = 1;
      X[i] = std::log(2.0 / d);
    }
  }
  return fit_barrier(u, X, use);
}

BarrierFit keller_osserman_probe_boundary(const ScalarField& u, const std::vector<int>& K_nodes) {
  const Grid2D& grid = *u.grid;
  const auto pts = grid.interior_points();
  const auto rho = grid.rho();
  const auto nodes = grid.boundary_nodes();
  std::vector<double> X(pts.size(), 0.0);
  std::vector<char> use(pts.size(), 0);
  if (K_nodes.empty()) return {};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double d = kInf;
    for (int b : K_nodes) {
      const Point q = nodes[static_cast<std::size_t>(b)].position;
      d = std::min(d, std::hypot(pts[i].x - q.x, pts[i].y - q.y));
    }
    if (d >= 2 * grid.h() && d <= 0.3) {
      use[i] = 1;
      X[i] = rho[i] * std::log(2.0 / d) / d;
    }
  }
  return fit_barrier(u, X, use);
}

}  // namespace semilab
