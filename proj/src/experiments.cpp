#include "semilab/experiments.hpp"

#include "semilab/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>

namespace semilab {
namespace {

constexpr double kPi = std::numbers::pi;

// Runs fn(0..count-1) on separate threads and returns the results by index.
template <class Fn>
auto parallel_map(std::size_t count, Fn&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<std::future<R>> futures;
  futures.reserve(count);
  for (std::size_t i = 0; i < count; ++i) futures.push_back(std::async(std::launch::async, fn, i));
  std::vector<R> out;
  out.reserve(count);
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

void require_increasing(const std::vector<int>& levels, std::size_t minimum, const char* what) {
  require(levels.size() >= minimum, ErrorCode::invalid_argument, std::string(what) + ": too few grid levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    require(levels[i] > levels[i - 1], ErrorCode::invalid_argument,
            std::string(what) + ": grid levels must be strictly increasing");
}

void require_increasing(const std::vector<double>& values, const char* what) {
  require(!values.empty(), ErrorCode::invalid_argument, std::string(what) + " must not be empty");
  for (std::size_t i = 1; i < values.size(); ++i)
    require(values[i] > values[i - 1], ErrorCode::invalid_argument, std::string(what) + " must be strictly increasing");
}

SolveOptions lenient() {
  SolveOptions opt;
  opt.throw_on_failure = false;
  return opt;
}

Point domain_centre(const Grid2D& grid) {
  return grid.kind() == DomainKind::unit_disk ? Point{0.0, 0.0} : Point{0.5, 0.5};
}

BRun make_run(double B, const SolveReport& r, double probe, double centre) {
  BRun run;
  run.B = B;
  run.probe = probe;
  run.centre = centre;
  run.newton_iters = r.newton_iters;
  run.converged = r.converged;
  return run;
}

BoundaryAtom atom_at(double s, double mass) {
  BoundaryAtom a;
  a.s = s;
  a.mass = mass;
  return a;
}

DensityPiece piece(DensityKind kind, double s0, double s1, double c) {
  DensityPiece d;
  d.kind = kind;
  d.s0 = s0;
  d.s1 = s1;
  d.c = c;
  return d;
}

std::vector<int> arc_nodes(const Grid2D& grid, double centre, double length) {
  if (length <= 0.0) return {};
  return boundary_nodes_in(grid, {Arc{centre - 0.5 * length, centre + 0.5 * length}});
}

}  // namespace

// ---------------------------------------------------------------------------
// Dirac threshold

DiracClassification classify_dirac(double a, const DiracOptions& opt) {
  require_increasing(opt.levels, 2, "dirac_threshold");
  require(std::isfinite(a) && a > 0.0, ErrorCode::invalid_argument, "dirac_threshold: atom mass must be positive");
  for (int L : opt.levels)
    require(L >= 4 && L % 2 == 0, ErrorCode::invalid_argument, "dirac_threshold: levels must be even and >= 4");

  DiracClassification out;
  out.a = a;
  out.levels = parallel_map(opt.levels.size(), [&](std::size_t k) {
    const int n = opt.levels[k] - 1;
    auto grid = Grid2D::build(DomainKind::unit_square, n);
    InteriorMeasure mu;
    mu.atoms.push_back({{0.5, 0.5}, a});
    const auto f = discretize_interior(mu, *grid);
    const auto r = solve_dirichlet(grid, BoundaryMeasure{}, Nonlinearity::exponential(), f, lenient());
    DiracLevel lv;
    lv.level = opt.levels[k];
    lv.n = n;
    lv.newton_iters = r.newton_iters;
    lv.saturated = r.saturated || !r.converged;
    lv.centre_value = r.u.values[grid->square_index((n + 1) / 2, (n + 1) / 2)];
    const auto W = grid->cell_areas();
    double I = 0.0;
    for (std::size_t i = 0; i < W.size(); ++i) I += W[i] * std::expm1(std::min(r.u.values[i], kExpGuard));
    lv.integral = I;
    return lv;
  });

  bool any_guard = false;
  bool any_fail = false;
  for (const auto& lv : out.levels) {
    any_guard = any_guard || lv.saturated;
  }
  int above = 0;
  for (std::size_t k = 0; k + 1 < out.levels.size(); ++k) {
    const auto& c = out.levels[k];
    const auto& f = out.levels[k + 1];
    const double beta = 2 * kPi * (f.centre_value - c.centre_value) / std::log(double(f.level) / c.level);
    out.felt_mass.push_back(beta);
    out.deficits.push_back((a - beta) / a);
    out.integral_ratios.push_back(f.integral / c.integral);
    if (!std::isfinite(beta)) any_fail = true;
    if ((a - beta) / a > opt.deficit_threshold) ++above;
  }
  const int pairs = static_cast<int>(out.deficits.size());
  if (any_guard || (!any_fail && above == pairs))
    out.verdict = "blow_up";
  else if (!any_fail && above == 0)
    out.verdict = "stable";
  else
    out.verdict = "inconclusive";
  return out;
}

DiracThresholdReport dirac_threshold(const DiracOptions& opt) {
  auto grid_a = opt.a_grid;
  std::sort(grid_a.begin(), grid_a.end());
  grid_a.erase(std::unique(grid_a.begin(), grid_a.end()), grid_a.end());
  require(grid_a.size() >= 2, ErrorCode::invalid_argument, "dirac_threshold: a_grid needs at least two values");
  require(opt.target_width > 0.0, ErrorCode::invalid_argument, "dirac_threshold: target width must be positive");

  DiracThresholdReport rep;
  rep.evaluations = parallel_map(grid_a.size(), [&](std::size_t i) { return classify_dirac(grid_a[i], opt); });

  double upper = std::numeric_limits<double>::infinity();
  for (const auto& e : rep.evaluations)
    if (e.verdict == "blow_up") {
      upper = e.a;
      break;
    }
  double lower = -1.0;
  for (const auto& e : rep.evaluations)
    if (e.verdict == "stable" && e.a < upper) lower = e.a;
  if (!std::isfinite(upper)) fail(ErrorCode::range, "dirac_threshold: no blow-up value in a_grid");
  if (lower < 0.0) fail(ErrorCode::range, "dirac_threshold: no stable value below the first blow-up in a_grid");

  for (int it = 0; it < opt.max_bisections && upper - lower > opt.target_width; ++it) {
    const double mid = 0.5 * (lower + upper);
    auto e = classify_dirac(mid, opt);
    const std::string verdict = e.verdict;
    rep.evaluations.push_back(std::move(e));
    if (verdict == "stable") {
      lower = mid;
    } else if (verdict == "blow_up") {
      upper = mid;
    } else {
      rep.message = "inconclusive classification at the bisection midpoint";
      break;
    }
  }
  rep.lower = lower;
  rep.upper = upper;
  rep.converged = upper - lower <= opt.target_width;
  return rep;
}

// ---------------------------------------------------------------------------
// Removability

std::vector<int> interior_set_nodes(const Grid2D& grid, const InteriorSet& K) {
  switch (K.shape) {
    case InteriorSet::Shape::empty:
      return {};
    case InteriorSet::Shape::point: {
      auto nodes = grid.nearest_interior_nodes(K.centre);
      require(!nodes.empty(), ErrorCode::placement, "interior set: point outside the domain");
      return {nodes.front()};
    }
    case InteriorSet::Shape::box: {
      require(K.side > 0.0, ErrorCode::invalid_argument, "interior set: box side must be positive");
      const double r = 0.5 * K.side;
      auto nodes = interior_nodes_in_box(grid, {K.centre.x - r, K.centre.y - r}, {K.centre.x + r, K.centre.y + r});
      require(!nodes.empty(), ErrorCode::placement, "interior set: box contains no grid node");
      return nodes;
    }
  }
  return {};
}

RemovabilityInteriorReport removability_interior(const RemovabilityInteriorOptions& opt) {
  require_increasing(opt.B_grid, "removability_interior: B_grid");
  require(opt.probe_distance > 0.0, ErrorCode::invalid_argument, "removability_interior: probe distance must be positive");
  if (!opt.capacity_levels.empty()) require_increasing(opt.capacity_levels, 1, "removability_interior");

  auto grid = Grid2D::build(DomainKind::unit_square, opt.n);
  const auto nodes = interior_set_nodes(*grid, opt.K);
  const auto pts = grid->interior_points();

  // Probe ring: the four axis points at the given distance from K.
  Point c = opt.K.centre;
  double reach = opt.probe_distance;
  if (opt.K.shape == InteriorSet::Shape::point) c = pts[nodes.front()];
  if (opt.K.shape == InteriorSet::Shape::box) reach += 0.5 * opt.K.side;
  const std::vector<Point> ring{{c.x + reach, c.y}, {c.x - reach, c.y}, {c.x, c.y + reach}, {c.x, c.y - reach}};
  for (const auto& p : ring)
    require(grid->contains(p), ErrorCode::placement, "removability_interior: probe ring leaves the domain");

  struct Solved {
    BRun run;
    ScalarField u;
  };
  auto solved = parallel_map(opt.B_grid.size(), [&](std::size_t k) {
    DirichletProblem prob;
    prob.grid = grid;
    prob.fixed_nodes = nodes;
    prob.fixed_values.assign(nodes.size(), opt.B_grid[k]);
    auto r = solve_dirichlet(prob, Nonlinearity::exponential(), lenient());
    double probe = 0.0;
    for (const auto& p : ring) probe += sample(r.u, p);
    probe /= static_cast<double>(ring.size());
    return Solved{make_run(opt.B_grid[k], r, probe, sample(r.u, domain_centre(*grid))), std::move(r.u)};
  });

  RemovabilityInteriorReport rep;
  for (const auto& s : solved) rep.runs.push_back(s.run);
  for (std::size_t k = 0; k + 1 < rep.runs.size(); ++k) rep.increments.push_back(rep.runs[k + 1].probe - rep.runs[k].probe);

  if (!nodes.empty()) {
    std::vector<Point> kpts;
    for (int i : nodes) kpts.push_back(pts[i]);
    rep.barrier = keller_osserman_probe(solved.back().u, kpts);
  }

  rep.capacity_levels = opt.capacity_levels;
  auto caps = parallel_map(opt.capacity_levels.size(), [&](std::size_t k) {
    auto g = Grid2D::build(DomainKind::unit_square, opt.capacity_levels[k]);
    auto K = interior_set_nodes(*g, opt.K);
    auto r = interior_capacity_primal(g, K, InteriorVariant::luxemburg);
    double q = 0.0;
    if (k + 1 == opt.capacity_levels.size() && !r.eta.empty()) {
      ScalarField z = ScalarField::zeros(g);
      z.values = r.eta;
      const auto lap = apply_laplacian(z);
      const auto W = g->cell_areas();
      for (std::size_t i = 0; i < W.size(); ++i) {
        const double t = std::abs(lap.values[i]);
        q += W[i] * t * std::log1p(t);
      }
    }
    return std::pair<double, double>{r.primal_value, q};
  });
  for (const auto& [cap, q] : caps) {
    rep.capacities.push_back(cap);
    rep.log_quantity = q;
  }

  const bool converged = std::all_of(rep.runs.begin(), rep.runs.end(), [](const BRun& r) { return r.converged; });
  rep.saturates = converged && (rep.increments.empty() || rep.increments.back() <= opt.saturation_tolerance);
  rep.grows = converged && !rep.increments.empty() &&
              std::all_of(rep.increments.begin(), rep.increments.end(),
                          [&](double d) { return d >= opt.growth_minimum; });
  rep.capacity_decreasing = true;
  for (std::size_t k = 0; k + 1 < rep.capacities.size(); ++k)
    if (!(rep.capacities[k + 1] <= rep.capacities[k])) rep.capacity_decreasing = false;
  if (rep.saturates && rep.capacity_decreasing)
    rep.verdict = "removable_consistent";
  else if (rep.grows && !rep.capacity_decreasing)
    rep.verdict = "non_removable";
  else
    rep.verdict = "inconclusive";
  return rep;
}

RemovabilityBoundaryReport removability_boundary(const RemovabilityBoundaryOptions& opt) {
  require_increasing(opt.B_grid, "removability_boundary: B_grid");
  require(opt.fixed_arc >= 0.0, ErrorCode::invalid_argument, "removability_boundary: arc length must be nonnegative");
  for (double l : opt.arc_lengths)
    require(l >= 0.0 && l <= 1.0, ErrorCode::invalid_argument, "removability_boundary: arcs must fit on one edge");
  auto grid = Grid2D::build(DomainKind::unit_square, opt.n);
  const Point centre = domain_centre(*grid);

  auto solve_arc = [&](double length, double B) {
    DirichletProblem prob;
    prob.grid = grid;
    prob.boundary_values.assign(grid->boundary_count(), 0.0);
    for (int j : arc_nodes(*grid, opt.arc_centre, length)) prob.boundary_values[j] = B;
    return solve_dirichlet(prob, Nonlinearity::exponential(), lenient());
  };

  RemovabilityBoundaryReport rep;
  struct Solved {
    BRun run;
    ScalarField u;
  };
  auto fixed = parallel_map(opt.B_grid.size(), [&](std::size_t k) {
    auto r = solve_arc(opt.fixed_arc, opt.B_grid[k]);
    const double v = sample(r.u, centre);
    return Solved{make_run(opt.B_grid[k], r, v, v), std::move(r.u)};
  });
  for (const auto& s : fixed) rep.B_runs.push_back(s.run);
  rep.sublinear = true;
  for (std::size_t k = 0; k + 1 < rep.B_runs.size(); ++k) {
    const double ratio = rep.B_runs[k + 1].probe / rep.B_runs[k].probe;
    rep.ratios.push_back(ratio);
    const bool doubling = std::abs(rep.B_runs[k + 1].B - 2 * rep.B_runs[k].B) <= 1e-12 * rep.B_runs[k + 1].B;
    if (doubling && !(ratio <= opt.ratio_maximum)) rep.sublinear = false;
  }
  const auto K_fixed = arc_nodes(*grid, opt.arc_centre, opt.fixed_arc);
  if (!K_fixed.empty()) rep.barrier = keller_osserman_probe_boundary(fixed.back().u, K_fixed);

  // Arc sweep: capacities from the nested driver (smallest set first).
  std::vector<std::size_t> order(opt.arc_lengths.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return opt.arc_lengths[a] < opt.arc_lengths[b]; });
  std::vector<std::vector<int>> family;
  for (std::size_t i : order) family.push_back(arc_nodes(*grid, opt.arc_centre, opt.arc_lengths[i]));
  auto caps = nested_boundary_capacities(grid, family);
  auto probes = parallel_map(opt.arc_lengths.size(), [&](std::size_t i) {
    return sample(solve_arc(opt.arc_lengths[i], opt.arc_B).u, centre);
  });
  rep.arc_runs.resize(opt.arc_lengths.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    auto& row = rep.arc_runs[order[r]];
    row.length = opt.arc_lengths[order[r]];
    row.nodes = static_cast<int>(family[r].size());
    row.capacity = caps[r].primal_value;
    row.probe = probes[order[r]];
  }
  rep.jointly_decreasing = true;
  for (std::size_t r = 0; r + 1 < order.size(); ++r) {
    const auto& small = rep.arc_runs[order[r]];
    const auto& big = rep.arc_runs[order[r + 1]];
    if (!(small.capacity < big.capacity && small.probe < big.probe)) rep.jointly_decreasing = false;
  }

  rep.atoms = parallel_map(opt.atom_masses.size(), [&](std::size_t k) {
    BoundaryMeasure mu;
    mu.atoms.push_back(atom_at(opt.arc_centre, opt.atom_masses[k]));
    return AtomVerdict{opt.atom_masses[k], admissibility_test(DomainKind::unit_square, opt.atom_levels, mu)};
  });
  rep.atoms_not_admissible = std::all_of(rep.atoms.begin(), rep.atoms.end(), [](const AtomVerdict& a) {
    return a.report.verdict == Verdict::not_admissible;
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Admissibility sweep

std::vector<NamedMeasure> default_sweep_family() {
  std::vector<NamedMeasure> out;
  BoundaryMeasure bounded;
  bounded.density.push_back(piece(DensityKind::constant, 0.2, 0.8, 1.0));
  out.push_back({"bounded_density", bounded});
  BoundaryMeasure atom;
  atom.atoms.push_back(atom_at(0.5, 1.0));
  out.push_back({"atom", atom});
  BoundaryMeasure cantor;
  cantor.cantor.push_back({0.2, 0.8, 1.0, 6});
  out.push_back({"cantor_depth6", cantor});
  BoundaryMeasure isqrt;
  isqrt.density.push_back(piece(DensityKind::inverse_sqrt, 0.2, 0.8, 0.5));
  out.push_back({"inverse_sqrt", isqrt});
  return out;
}

AdmissibilitySweepReport admissibility_sweep(const AdmissibilitySweepOptions& opt) {
  require(!opt.family.empty(), ErrorCode::invalid_argument, "admissibility_sweep: empty measure family");
  require_increasing(opt.scales, "admissibility_sweep: scales");
  require(opt.scales.front() > 0.0, ErrorCode::invalid_argument, "admissibility_sweep: scales must be positive");
  require_increasing(opt.levels, 3, "admissibility_sweep");

  const std::size_t S = opt.scales.size();
  auto reports = parallel_map(opt.family.size() * S, [&](std::size_t t) {
    return admissibility_test(opt.domain, opt.levels, opt.family[t / S].mu.scaled(opt.scales[t % S]));
  });
  auto norm_grid = Grid2D::build(opt.domain, opt.norm_level);

  AdmissibilitySweepReport rep;
  for (std::size_t m = 0; m < opt.family.size(); ++m) {
    SweepRow row;
    row.name = opt.family[m].name;
    row.bexp_norm = bexp_boundary_norm(norm_grid, opt.family[m].mu);
    row.scales = opt.scales;
    row.a0_upper = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < S; ++k) {
      row.reports.push_back(reports[m * S + k]);
      const Verdict v = reports[m * S + k].verdict;
      if (!std::isfinite(row.a0_upper)) {
        if (v == Verdict::not_admissible)
          row.a0_upper = opt.scales[k];
        else if (v == Verdict::admissible)
          row.a0_lower = opt.scales[k];
      }
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Capacity studies

namespace {

bool weakly_dual(const CapacityReport& r) {
  return std::isnan(r.dual_value) || r.dual_value <= r.primal_value * (1.0 + 1e-9);
}

}  // namespace

CapacityShrinkReport capacity_shrink(const CapacityShrinkOptions& opt) {
  require(!opt.arc_lengths.empty(), ErrorCode::invalid_argument, "capacity_shrink: no arcs");
  for (double l : opt.arc_lengths)
    require(l > 0.0 && l <= 1.0, ErrorCode::invalid_argument, "capacity_shrink: arcs must fit on one edge");
  auto grid = Grid2D::build(DomainKind::unit_square, opt.n);

  std::vector<std::size_t> order(opt.arc_lengths.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return opt.arc_lengths[a] < opt.arc_lengths[b]; });
  std::vector<std::vector<int>> family;
  for (std::size_t i : order) family.push_back(arc_nodes(*grid, opt.arc_centre, opt.arc_lengths[i]));
  auto caps = nested_boundary_capacities(grid, family, opt.capacity);

  CapacityShrinkReport rep;
  rep.rows.resize(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rep.rows[order[r]] = {opt.arc_lengths[order[r]], std::move(caps[r])};

  rep.weak_duality = std::all_of(rep.rows.begin(), rep.rows.end(), [](const ShrinkRow& r) { return weakly_dual(r.report); });
  rep.primal_strictly_decreasing = true;
  rep.monotone = true;
  for (std::size_t r = 0; r + 1 < order.size(); ++r) {
    const auto& small = rep.rows[order[r]].report;
    const auto& big = rep.rows[order[r + 1]].report;
    const bool same = family[r].size() == family[r + 1].size();
    if (!same && !(small.primal_value < big.primal_value)) rep.primal_strictly_decreasing = false;
    if (small.primal_value > big.primal_value * (1 + 1e-9)) rep.monotone = false;
    if (small.dual_value > big.dual_value * (1 + 1e-9)) rep.monotone = false;
  }
  return rep;
}

DualityGapReport duality_gap(const DualityGapOptions& opt) {
  require_increasing(opt.levels, 2, "duality_gap");
  CapacityShrinkOptions shrink;
  shrink.arc_centre = opt.arc_centre;
  shrink.arc_lengths = opt.arc_lengths;
  shrink.capacity = opt.capacity;
  std::vector<CapacityShrinkReport> per_level;
  for (int n : opt.levels) {
    shrink.n = n;
    per_level.push_back(capacity_shrink(shrink));
  }

  DualityGapReport rep;
  rep.weak_duality = std::all_of(per_level.begin(), per_level.end(), [](const CapacityShrinkReport& r) { return r.weak_duality; });
  rep.all_non_increasing = true;
  for (std::size_t a = 0; a < opt.arc_lengths.size(); ++a) {
    GapRow row;
    row.length = opt.arc_lengths[a];
    row.levels = opt.levels;
    row.non_increasing = true;
    for (const auto& lv : per_level) {
      const auto& r = lv.rows[a].report;
      row.primal.push_back(r.primal_value);
      row.dual.push_back(r.dual_value);
      row.gap.push_back(r.gap_rel);
    }
    for (std::size_t k = 0; k + 1 < row.gap.size(); ++k)
      if (!(row.gap[k + 1] <= row.gap[k])) row.non_increasing = false;
    rep.all_non_increasing = rep.all_non_increasing && row.non_increasing;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace semilab
