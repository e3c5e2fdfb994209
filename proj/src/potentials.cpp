#include "semilab/potentials.hpp"

#include "semilab/error.hpp"
#include "semilab/orlicz.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace semilab {

std::string to_string(PotentialKind kind) { return kind == PotentialKind::poisson ? "poisson" : "green"; }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::admissible: return "admissible";
    case Verdict::not_admissible: return "not_admissible";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double poisson_kernel_disk(Point x, Point y) {
  const double r2 = x.x * x.x + x.y * x.y;
  require(r2 < 1.0, ErrorCode::domain, "Poisson kernel needs |x| < 1");
  const double dx = x.x - y.x, dy = x.y - y.y;
  return (1.0 - r2) / (2.0 * std::numbers::pi * (dx * dx + dy * dy));
}

double green_kernel_disk(Point x, Point y) {
  const double dxy = std::hypot(x.x - y.x, x.y - y.y);
  require(dxy > 0.0, ErrorCode::domain, "Green kernel is singular at x = y");
  const double ry2 = y.x * y.x + y.y * y.y;
  if (ry2 == 0.0) return -std::log(std::hypot(x.x, x.y)) / (2.0 * std::numbers::pi);
  const Point star{y.x / ry2, y.y / ry2};
  return std::log(std::sqrt(ry2) * std::hypot(x.x - star.x, x.y - star.y) / dxy) / (2.0 * std::numbers::pi);
}

ScalarField harmonic_extension(const GridPtr& grid, std::span<const double> boundary_values) {
  require(boundary_values.size() == grid->boundary_count(), ErrorCode::grid_mismatch,
          "boundary vector has the wrong size");
  ScalarField f = ScalarField::zeros(grid);
  f.values = grid->laplacian().solve({}, boundary_values);
  f.boundary.assign(boundary_values.begin(), boundary_values.end());
  return f;
}

ScalarField poisson_potential_of_masses(const GridPtr& grid, std::span<const double> masses, PoissonRoute route) {
  const std::vector<double> m(masses.begin(), masses.end());
  const auto density = boundary_density_values(m, *grid);
  const bool kernel = grid->kind() == DomainKind::unit_disk && route != PoissonRoute::discrete;
  require(!(grid->kind() == DomainKind::unit_square && route == PoissonRoute::kernel), ErrorCode::invalid_argument,
          "closed-form kernel route exists only on the unit disk");
  if (!kernel) return harmonic_extension(grid, density);
  ScalarField f = ScalarField::zeros(grid);
  f.boundary = density;
  const auto pts = grid->interior_points();
  const auto nodes = grid->boundary_nodes();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    double s = 0.0;
    for (std::size_t b = 0; b < nodes.size(); ++b)
      if (m[b] != 0.0) s += poisson_kernel_disk(pts[k], nodes[b].position) * m[b];
    f.values[k] = s;
  }
  return f;
}

PotentialReport poisson_potential(const GridPtr& grid, const BoundaryMeasure& mu, PoissonRoute route) {
  PotentialReport r;
  r.kind = PotentialKind::poisson;
  r.measure_tv = mu.total_variation();
  r.field = poisson_potential_of_masses(grid, discretize_boundary(mu, *grid), route);
  return r;
}

ScalarField green_potential_of_source(const GridPtr& grid, std::span<const double> source) {
  require(source.size() == grid->interior_count(), ErrorCode::grid_mismatch, "source vector has the wrong size");
  ScalarField f = ScalarField::zeros(grid);
  f.values = grid->laplacian().solve(source, {});
  return f;
}

PotentialReport green_potential(const GridPtr& grid, const InteriorMeasure& mu) {
  PotentialReport r;
  r.kind = PotentialKind::green;
  const auto src = discretize_interior(mu, *grid);
  const auto areas = grid->cell_areas();
  for (std::size_t k = 0; k < src.size(); ++k) r.measure_tv += std::abs(src[k]) * areas[k];
  r.field = green_potential_of_source(grid, src);
  return r;
}

double bexp_boundary_norm(const GridPtr& grid, const BoundaryMeasure& mu) {
  return luxemburg_norm(poisson_potential(grid, mu).field, {NKind::P, Weight::rho});
}

double bexp_interior_norm(const GridPtr& grid, const InteriorMeasure& mu) {
  return luxemburg_norm(green_potential(grid, mu).field, {NKind::P, Weight::lebesgue});
}

AdmissibilityReport admissibility_test(DomainKind domain, const std::vector<int>& levels, const BoundaryMeasure& mu,
                                       double tau, double growth_threshold) {
  require(levels.size() >= 3, ErrorCode::invalid_argument, "admissibility test needs at least 3 grid levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    require(levels[i] > levels[i - 1], ErrorCode::invalid_argument, "grid levels must be strictly increasing");
  AdmissibilityReport rep;
  rep.tau = tau;
  rep.growth_threshold = growth_threshold;
  bool any_saturated = false;
  for (int n : levels) {
    auto grid = Grid2D::build(domain, n);
    const ScalarField H = poisson_potential(grid, mu).field;
    const auto w = quadrature_weights(*grid, Weight::rho);
    AdmissibilityLevel lv;
    lv.n = n;
    for (std::size_t k = 0; k < w.size(); ++k) {
      lv.max_potential = std::max(lv.max_potential, H.values[k]);
      if (H.values[k] > kExpGuard) {
        lv.saturated = true;
        continue;
      }
      lv.integral += std::exp(H.values[k]) * w[k];
    }
    if (lv.saturated) lv.integral = std::numeric_limits<double>::infinity();
    any_saturated = any_saturated || lv.saturated;
    rep.levels.push_back(lv);
  }
  bool all_small = true;
  for (std::size_t i = 1; i < rep.levels.size(); ++i) {
    const double r = std::isfinite(rep.levels[i - 1].integral)
                         ? rep.levels[i].integral / rep.levels[i - 1].integral
                         : std::numeric_limits<double>::infinity();
    rep.ratios.push_back(r);
    all_small = all_small && r <= 1.0 + tau;
  }
  if (any_saturated || rep.ratios.back() >= growth_threshold)
    rep.verdict = Verdict::not_admissible;
  else if (all_small)
    rep.verdict = Verdict::admissible;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

}  // namespace semilab
