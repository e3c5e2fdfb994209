#include "semilab/measures.hpp"

#include "semilab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace semilab {

std::string to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::constant: return "constant";
    case DensityKind::inverse_sqrt: return "inverse_sqrt";
    case DensityKind::sine_bump: return "sine_bump";
    case DensityKind::table: return "table";
  }
  return "constant";
}

DensityKind density_kind_from_string(const std::string& name) {
  if (name == "constant") return DensityKind::constant;
  if (name == "inverse_sqrt") return DensityKind::inverse_sqrt;
  if (name == "sine_bump") return DensityKind::sine_bump;
  if (name == "table" || name == "custom") return DensityKind::table;
  fail(ErrorCode::config, "unknown density kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// DensityPiece

double DensityPiece::value(double s) const {
  if (s < s0 || s > s1) return 0.0;
  const double t = s - s0, L = s1 - s0;
  double v = 0.0;
  switch (kind) {
    case DensityKind::constant: v = c; break;
    case DensityKind::inverse_sqrt: v = t > 0 ? c / std::sqrt(t) : std::numeric_limits<double>::infinity(); break;
    case DensityKind::sine_bump: {
      const double sn = std::sin(std::numbers::pi * t / L);
      v = c * sn * sn;
      break;
    }
    case DensityKind::table: {
      const auto m = table.size();
      const auto idx = std::min(m - 1, static_cast<std::size_t>(t / L * static_cast<double>(m)));
      v = table[idx];
      break;
    }
  }
  return std::min(v, cap);
}

double DensityPiece::integral(double a, double b) const {
  a = std::max(a, s0);
  b = std::min(b, s1);
  if (!(b > a)) return 0.0;
  const double ta = a - s0, tb = b - s0, L = s1 - s0;
  switch (kind) {
    case DensityKind::constant: return std::min(c, cap) * (b - a);
    case DensityKind::inverse_sqrt: {
      if (c == 0.0) return 0.0;
      const double tk = cap == 0.0 ? std::numeric_limits<double>::infinity() : (c / cap) * (c / cap);
      double total = 0.0;
      const double lo = std::min(ta, tk), hi = std::min(tb, tk);
      if (hi > lo) total += cap * (hi - lo);
      const double from = std::max(ta, tk);
      if (tb > from) total += 2.0 * c * (std::sqrt(tb) - std::sqrt(from));
      return total;
    }
    case DensityKind::sine_bump: {
      const double pi = std::numbers::pi;
      auto F = [&](double t) { return c * (t / 2 - L * std::sin(2 * pi * t / L) / (4 * pi)); };
      auto part = [&](double x0, double x1) { return x1 > x0 ? F(x1) - F(x0) : 0.0; };
      if (cap >= c) return part(ta, tb);
      const double t1 = L / pi * std::asin(std::sqrt(std::max(cap, 0.0) / c)), t2 = L - t1;
      return part(ta, std::min(tb, t1)) + cap * std::max(0.0, std::min(tb, t2) - std::max(ta, t1)) +
             part(std::max(ta, t2), tb);
    }
    case DensityKind::table: {
      const double m = static_cast<double>(table.size());
      const double dx = L / m;
      double total = 0.0;
      for (std::size_t i = 0; i < table.size(); ++i) {
        const double x0 = std::max(ta, i * dx), x1 = std::min(tb, (i + 1) * dx);
        if (x1 > x0) total += std::min(table[i], cap) * (x1 - x0);
      }
      return total;
    }
  }
  return 0.0;
}

double DensityPiece::sup() const {
  double v = c;
  if (kind == DensityKind::inverse_sqrt) v = c > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  if (kind == DensityKind::table) v = table.empty() ? 0.0 : *std::max_element(table.begin(), table.end());
  return std::min(v, cap);
}

std::vector<double> CantorPart::centres() const {
  std::vector<std::pair<double, double>> iv{{s0, s1}};
  for (int g = 0; g < depth; ++g) {
    std::vector<std::pair<double, double>> next;
    next.reserve(iv.size() * 2);
    for (auto [a, b] : iv) {
      const double third = (b - a) / 3.0;
      next.emplace_back(a, a + third);
      next.emplace_back(b - third, b);
    }
    iv.swap(next);
  }
  std::vector<double> out;
  out.reserve(iv.size());
  for (auto [a, b] : iv) out.push_back(0.5 * (a + b));
  return out;
}

// ---------------------------------------------------------------------------
// BoundaryMeasure

double BoundaryMeasure::singular_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  for (const auto& c : cantor) m += c.mass;
  return m;
}

double BoundaryMeasure::regular_mass() const {
  double m = 0.0;
  for (const auto& d : density) m += d.total();
  return m;
}

double BoundaryMeasure::total_variation() const { return singular_mass() + regular_mass(); }

bool BoundaryMeasure::is_zero() const { return total_variation() == 0.0; }

double BoundaryMeasure::density_at(double s) const {
  double v = 0.0;
  for (const auto& d : density) v += d.value(s);
  return v;
}

BoundaryMeasure BoundaryMeasure::scaled(double a) const {
  BoundaryMeasure out = *this;
  for (auto& at : out.atoms) at.mass *= a;
  for (auto& c : out.cantor) c.mass *= a;
  for (auto& d : out.density) {
    d.c *= a;
    for (double& v : d.table) v *= a;
    d.cap *= a;
  }
  return out;
}

Decomposition lebesgue_decompose(const BoundaryMeasure& mu) {
  Decomposition d;
  d.singular.atoms = mu.atoms;
  d.singular.cantor = mu.cantor;
  d.regular.density = mu.density;
  return d;
}

BoundaryMeasure recombine(const Decomposition& parts) {
  BoundaryMeasure mu;
  mu.atoms = parts.singular.atoms;
  mu.cantor = parts.singular.cantor;
  mu.density = parts.regular.density;
  mu.atoms.insert(mu.atoms.end(), parts.regular.atoms.begin(), parts.regular.atoms.end());
  mu.cantor.insert(mu.cantor.end(), parts.regular.cantor.begin(), parts.regular.cantor.end());
  mu.density.insert(mu.density.end(), parts.singular.density.begin(), parts.singular.density.end());
  return mu;
}

BoundaryMeasure truncate_regular(const BoundaryMeasure& mu_R, double k) {
  require(!mu_R.has_singular_part(), ErrorCode::domain, "truncation is defined only for the regular (density) part");
  require(k >= 0.0, ErrorCode::invalid_argument, "truncation level must be >= 0");
  BoundaryMeasure out = mu_R;
  for (auto& d : out.density) d.cap = std::min(d.cap, k);
  return out;
}

namespace {

void validate(const BoundaryMeasure& mu, const Grid2D& grid) {
  const double L = grid.perimeter();
  for (const auto& a : mu.atoms) require(a.mass >= 0.0, ErrorCode::invalid_argument, "atom masses must be >= 0");
  for (const auto& d : mu.density) {
    require(d.s0 >= -1e-12 && d.s1 <= L + 1e-12 && d.s1 > d.s0, ErrorCode::invalid_argument,
            "density piece must satisfy 0 <= s0 < s1 <= perimeter");
    require(d.c >= 0.0, ErrorCode::invalid_argument, "density amplitude must be >= 0");
    require(d.kind != DensityKind::table || !d.table.empty(), ErrorCode::invalid_argument, "density table is empty");
    for (double v : d.table) require(v >= 0.0, ErrorCode::invalid_argument, "density table values must be >= 0");
  }
  for (std::size_t i = 0; i < mu.density.size(); ++i)
    for (std::size_t j = i + 1; j < mu.density.size(); ++j) {
      const auto& a = mu.density[i];
      const auto& b = mu.density[j];
      require(a.s1 <= b.s0 + 1e-12 || b.s1 <= a.s0 + 1e-12, ErrorCode::invalid_argument,
              "density pieces must not overlap");
    }
  for (const auto& c : mu.cantor) {
    require(c.depth >= 0 && c.depth <= 24, ErrorCode::invalid_argument, "Cantor depth must lie in [0, 24]");
    require(c.mass >= 0.0 && c.s1 > c.s0, ErrorCode::invalid_argument, "Cantor arc must have s1 > s0, mass >= 0");
  }
}

double atom_arclength(const BoundaryAtom& a, const Grid2D& grid) {
  if (!a.position) return a.s;
  const Point p = *a.position;
  const double tol = 0.5 * grid.h();
  if (grid.kind() == DomainKind::unit_disk) {
    require(std::abs(std::hypot(p.x, p.y) - 1.0) <= tol, ErrorCode::placement, "boundary atom is off the circle");
    double th = std::atan2(p.y, p.x);
    return th < 0 ? th + 2 * std::numbers::pi : th;
  }
  const double x = std::clamp(p.x, 0.0, 1.0), y = std::clamp(p.y, 0.0, 1.0);
  const double off = std::hypot(p.x - x, p.y - y);
  const double d[4] = {y, 1.0 - x, 1.0 - y, x};  // bottom, right, top, left
  const int e = static_cast<int>(std::min_element(d, d + 4) - d);
  require(off + d[e] <= tol, ErrorCode::placement, "boundary atom is off the square boundary");
  switch (e) {
    case 0: return x;
    case 1: return 1.0 + y;
    case 2: return 3.0 - x;
    default: return std::fmod(4.0 - y, 4.0);
  }
}

}  // namespace

std::vector<double> discretize_boundary(const BoundaryMeasure& mu, const Grid2D& grid) {
  validate(mu, grid);
  const auto nodes = grid.boundary_nodes();
  const double L = grid.perimeter();
  std::vector<double> w(nodes.size(), 0.0);
  for (const auto& a : mu.atoms) w[static_cast<std::size_t>(grid.nearest_boundary_node(atom_arclength(a, grid)))] += a.mass;
  for (const auto& c : mu.cantor) {
    const auto centres = c.centres();
    const double each = c.mass / static_cast<double>(centres.size());
    for (double s : centres) w[static_cast<std::size_t>(grid.nearest_boundary_node(s))] += each;
  }
  for (const auto& d : mu.density) {
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      const double lo = nodes[b].s - 0.5 * nodes[b].weight;
      const double hi = nodes[b].s + 0.5 * nodes[b].weight;
      double m = d.integral(std::max(lo, 0.0), std::min(hi, L));
      if (lo < 0.0) m += d.integral(lo + L, L);
      if (hi > L) m += d.integral(0.0, hi - L);
      w[b] += m;
    }
  }
  return w;
}

std::vector<double> boundary_density_values(const std::vector<double>& masses, const Grid2D& grid) {
  const auto nodes = grid.boundary_nodes();
  require(masses.size() == nodes.size(), ErrorCode::grid_mismatch, "boundary mass vector has the wrong size");
  std::vector<double> v(masses.size());
  for (std::size_t b = 0; b < v.size(); ++b) v[b] = masses[b] / nodes[b].weight;
  return v;
}

std::vector<int> boundary_nodes_in(const Grid2D& grid, const std::vector<Arc>& arcs) {
  const double L = grid.perimeter();
  const double tol = 1e-9 * grid.h();
  std::vector<int> out;
  const auto nodes = grid.boundary_nodes();
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    for (const Arc& a : arcs) {
      double len = a.s1 - a.s0;
      if (len < 0) len += L;
      if (len >= L - tol) {
        out.push_back(static_cast<int>(b));
        break;
      }
      double off = std::fmod(nodes[b].s - a.s0, L);
      if (off < 0) off += L;
      if (off > L - tol) off -= L;
      if (off >= -tol && off <= len + tol) {
        out.push_back(static_cast<int>(b));
        break;
      }
    }
  }
  return out;
}

double measure_of_set(const std::vector<double>& node_masses, const std::vector<int>& nodes) {
  double m = 0.0;
  for (int k : nodes) m += node_masses.at(static_cast<std::size_t>(k));
  return m;
}

// ---------------------------------------------------------------------------
// InteriorMeasure

double InteriorMeasure::atom_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  return m;
}

InteriorMeasure InteriorMeasure::scaled(double a) const {
  InteriorMeasure out = *this;
  for (auto& at : out.atoms) at.mass *= a;
  if (density) {
    auto base = density;
    out.density = [base, a](Point p) { return a * base(p); };
  }
  return out;
}

std::vector<double> discretize_interior(const InteriorMeasure& mu, const Grid2D& grid) {
  std::vector<double> src(grid.interior_count(), 0.0);
  const auto areas = grid.cell_areas();
  for (const auto& a : mu.atoms) {
    require(grid.contains(a.x) && grid.distance_to_boundary(a.x) >= grid.h() * (1.0 - 1e-12), ErrorCode::placement,
            "interior atom lies within one mesh spacing of the boundary");
    const auto nearest = grid.nearest_interior_nodes(a.x);
    const double share = a.mass / static_cast<double>(nearest.size());
    for (int k : nearest) src[static_cast<std::size_t>(k)] += share / areas[static_cast<std::size_t>(k)];
  }
  if (mu.density) {
    const auto pts = grid.interior_points();
    for (std::size_t k = 0; k < src.size(); ++k) src[k] += mu.density(pts[k]);
  }
  return src;
}

double interior_measure_of_set(const std::vector<double>& source, const Grid2D& grid, const std::vector<int>& nodes) {
  const auto areas = grid.cell_areas();
  double m = 0.0;
  for (int k : nodes) m += source.at(static_cast<std::size_t>(k)) * areas[static_cast<std::size_t>(k)];
  return m;
}

}  // namespace semilab
