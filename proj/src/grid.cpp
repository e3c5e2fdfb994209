#include "semilab/grid.hpp"

#include "semilab/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace semilab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int floor_log2(double x) {
  int d = 0;
  while (std::ldexp(1.0, d + 1) <= x * (1.0 + 1e-12)) ++d;
  return d;
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

using Triplet = Eigen::Triplet<double>;

}  // namespace

std::string to_string(DomainKind kind) {
  return kind == DomainKind::unit_square ? "unit_square" : "unit_disk";
}

DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "unit_square" || name == "square") return DomainKind::unit_square;
  if (name == "unit_disk" || name == "disk") return DomainKind::unit_disk;
  fail(ErrorCode::config, "unknown domain kind '" + name + "'");
}

std::string to_string(Weight w) { return w == Weight::rho ? "rho" : "lebesgue"; }

Weight weight_from_string(const std::string& name) {
  if (name == "rho") return Weight::rho;
  if (name == "lebesgue") return Weight::lebesgue;
  fail(ErrorCode::config, "unknown weight '" + name + "'");
}

// ---------------------------------------------------------------------------
// DyadicTree

std::size_t DyadicTree::leaf_count() const {
  return static_cast<std::size_t>(leaves_per_axis) * static_cast<std::size_t>(leaves_per_axis);
}

std::size_t DyadicTree::leaf_of(Point p) const {
  const double ls = leaf_side();
  auto clampi = [&](double t) {
    long k = static_cast<long>(std::floor(t / ls));
    return static_cast<std::size_t>(std::clamp<long>(k, 0, leaves_per_axis - 1));
  };
  return clampi(p.x - origin.x) + clampi(p.y - origin.y) * static_cast<std::size_t>(leaves_per_axis);
}

std::size_t DyadicTree::ancestor(std::size_t leaf, int level) const {
  const std::size_t L = static_cast<std::size_t>(leaves_per_axis);
  const int shift = depth - level;
  const std::size_t ix = (leaf % L) >> shift;
  const std::size_t iy = (leaf / L) >> shift;
  return ix + iy * (std::size_t{1} << level);
}

// ---------------------------------------------------------------------------
// Grid2D

std::shared_ptr<const Grid2D> Grid2D::build(DomainKind kind, int n) {
  require(n >= 4, ErrorCode::invalid_resolution, "grid resolution must satisfy n >= 4, got " + std::to_string(n));
  return std::shared_ptr<const Grid2D>(new Grid2D(kind, n));
}

Grid2D::Grid2D(DomainKind kind, int n) : kind_(kind), n_(n) {
  if (kind == DomainKind::unit_square)
    build_square();
  else
    build_disk();
}

void Grid2D::build_square() {
  m_ = n_;
  h_ = 1.0 / (n_ + 1);
  const std::size_t N = static_cast<std::size_t>(n_) * n_;
  points_.resize(N);
  areas_.assign(N, h_ * h_);
  rho_.resize(N);
  for (int j = 1; j <= n_; ++j)
    for (int i = 1; i <= n_; ++i) {
      const int k = square_index(i, j);
      const double x = i * h_, y = j * h_;
      points_[k] = {x, y};
      rho_[k] = std::min({x, 1.0 - x, y, 1.0 - y});
    }

  const int per_edge = n_ + 1;
  boundary_.resize(4 * static_cast<std::size_t>(per_edge));
  const double d = 1.0 / std::sqrt(2.0);
  for (int b = 0; b < 4 * per_edge; ++b) {
    BoundaryNode& node = boundary_[b];
    node.s = b * h_;
    node.weight = h_;
    const int edge = b / per_edge;
    const int t = b % per_edge;  // 0 at the edge's starting corner
    switch (edge) {
      case 0:  // bottom, (t h, 0)
        node.position = {t * h_, 0.0};
        node.normal = t == 0 ? Point{-d, -d} : Point{0.0, -1.0};
        if (t > 0) node.inner1 = square_index(t, 1), node.inner2 = square_index(t, 2);
        break;
      case 1:  // right, (1, t h)
        node.position = {1.0, t * h_};
        node.normal = t == 0 ? Point{d, -d} : Point{1.0, 0.0};
        if (t > 0) node.inner1 = square_index(n_, t), node.inner2 = square_index(n_ - 1, t);
        break;
      case 2:  // top, (1 - t h, 1)
        node.position = {1.0 - t * h_, 1.0};
        node.normal = t == 0 ? Point{d, d} : Point{0.0, 1.0};
        if (t > 0) node.inner1 = square_index(n_ + 1 - t, n_), node.inner2 = square_index(n_ + 1 - t, n_ - 1);
        break;
      default:  // left, (0, 1 - t h)
        node.position = {0.0, 1.0 - t * h_};
        node.normal = t == 0 ? Point{-d, d} : Point{-1.0, 0.0};
        if (t > 0) node.inner1 = square_index(1, n_ + 1 - t), node.inner2 = square_index(2, n_ + 1 - t);
        break;
    }
  }

  tree_.origin = {0.0, 0.0};
  tree_.side = 1.0;
  tree_.depth = floor_log2(1.0 / h_);
  tree_.leaves_per_axis = 1 << tree_.depth;
}

void Grid2D::build_disk() {
  h_ = 1.0 / (n_ + 0.5);
  m_ = 4 * static_cast<int>(std::lround(std::numbers::pi * n_ / 2.0));
  const double dtheta = kTwoPi / m_;
  const std::size_t N = static_cast<std::size_t>(n_) * m_;
  points_.resize(N);
  areas_.resize(N);
  rho_.resize(N);
  for (int i = 1; i <= n_; ++i) {
    const double r = ring_radius(i);
    for (int j = 0; j < m_; ++j) {
      const int k = disk_index(i, j);
      const double th = j * dtheta;
      points_[k] = {r * std::cos(th), r * std::sin(th)};
      areas_[k] = r * h_ * dtheta;
      rho_[k] = 1.0 - r;
    }
  }
  boundary_.resize(m_);
  for (int j = 0; j < m_; ++j) {
    BoundaryNode& node = boundary_[j];
    const double th = j * dtheta;
    node.s = th;
    node.position = {std::cos(th), std::sin(th)};
    node.normal = node.position;
    node.weight = dtheta;
    node.inner1 = disk_index(n_, j);
    node.inner2 = disk_index(n_ - 1, j);
  }
  tree_.origin = {-1.0, -1.0};
  tree_.side = 2.0;
  tree_.depth = floor_log2(2.0 / h_);
  tree_.leaves_per_axis = 1 << tree_.depth;
}

int Grid2D::disk_index(int ring, int angle) const {
  const int a = ((angle % m_) + m_) % m_;
  return (ring - 1) * m_ + a;
}

double Grid2D::perimeter() const { return kind_ == DomainKind::unit_square ? 4.0 : kTwoPi; }

double Grid2D::wrap_arclength(double s) const {
  const double L = perimeter();
  double w = std::fmod(s, L);
  if (w < 0) w += L;
  return w;
}

Point Grid2D::boundary_point(double s) const {
  const double w = wrap_arclength(s);
  if (kind_ == DomainKind::unit_disk) return {std::cos(w), std::sin(w)};
  if (w < 1.0) return {w, 0.0};
  if (w < 2.0) return {1.0, w - 1.0};
  if (w < 3.0) return {3.0 - w, 1.0};
  return {0.0, 4.0 - w};
}

double Grid2D::distance_to_boundary(Point p) const {
  if (kind_ == DomainKind::unit_disk) return 1.0 - std::hypot(p.x, p.y);
  return std::min({p.x, 1.0 - p.x, p.y, 1.0 - p.y});
}

bool Grid2D::contains(Point p) const { return distance_to_boundary(p) > 0.0; }

int Grid2D::nearest_boundary_node(double s) const {
  const double w = wrap_arclength(s);
  const double spacing = kind_ == DomainKind::unit_square ? h_ : kTwoPi / m_;
  const long k = std::lround(w / spacing);
  const long count = static_cast<long>(boundary_.size());
  return static_cast<int>(((k % count) + count) % count);
}

std::vector<int> Grid2D::nearest_interior_nodes(Point p) const {
  std::vector<int> candidates;
  if (kind_ == DomainKind::unit_square) {
    const int ic = static_cast<int>(std::lround(p.x / h_));
    const int jc = static_cast<int>(std::lround(p.y / h_));
    for (int j = jc - 1; j <= jc + 1; ++j)
      for (int i = ic - 1; i <= ic + 1; ++i)
        if (i >= 1 && i <= n_ && j >= 1 && j <= n_) candidates.push_back(square_index(i, j));
    if (candidates.empty()) {
      const int i = std::clamp(ic, 1, n_), j = std::clamp(jc, 1, n_);
      candidates.push_back(square_index(i, j));
    }
  } else {
    const double r = std::hypot(p.x, p.y);
    const int ic = static_cast<int>(std::lround(r / h_ + 0.5));
    for (int i = std::max(1, ic - 1); i <= std::min(n_, ic + 1); ++i)
      for (int j = 0; j < m_; ++j) candidates.push_back(disk_index(i, j));
    if (candidates.empty())
      for (int j = 0; j < m_; ++j) candidates.push_back(disk_index(n_, j));
  }
  double best = std::numeric_limits<double>::infinity();
  for (int k : candidates) best = std::min(best, dist(points_[k], p));
  const double tie = 1e-9 * h_;
  std::vector<int> out;
  for (int k : candidates)
    if (dist(points_[k], p) <= best + tie) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

int Grid2D::square_boundary_index(int i, int j) const {
  const int per_edge = n_ + 1;
  const int count = 4 * per_edge;
  int b;
  if (j == 0)
    b = i;
  else if (i == n_ + 1)
    b = per_edge + j;
  else if (j == n_ + 1)
    b = 3 * per_edge - i;
  else
    b = 4 * per_edge - j;
  return ((b % count) + count) % count;
}

std::span<const double> Grid2D::torsion() const {
  std::call_once(torsion_once_, [this] {
    const std::vector<double> one(interior_count(), 1.0);
    torsion_ = laplacian().solve(one, {});
  });
  return torsion_;
}

const DirichletLaplacian& Grid2D::laplacian() const {
  std::call_once(laplacian_once_, [this] { laplacian_ = std::make_unique<DirichletLaplacian>(*this); });
  return *laplacian_;
}

// ---------------------------------------------------------------------------
// DirichletLaplacian

DirichletLaplacian::DirichletLaplacian(const Grid2D& grid) {
  const int n = grid.n();
  const auto N = static_cast<Eigen::Index>(grid.interior_count());
  const auto Nb = static_cast<Eigen::Index>(grid.boundary_count());
  std::vector<Triplet> a, c;
  weights_.assign(grid.cell_areas().begin(), grid.cell_areas().end());

  if (grid.kind() == DomainKind::unit_square) {
    a.reserve(5 * N);
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i) {
        const int k = grid.square_index(i, j);
        a.emplace_back(k, k, 4.0);
        if (i > 1) a.emplace_back(k, grid.square_index(i - 1, j), -1.0);
        if (i < n) a.emplace_back(k, grid.square_index(i + 1, j), -1.0);
        if (j > 1) a.emplace_back(k, grid.square_index(i, j - 1), -1.0);
        if (j < n) a.emplace_back(k, grid.square_index(i, j + 1), -1.0);
      }
    const int per_edge = n + 1;
    for (int t = 1; t <= n; ++t) {
      c.emplace_back(grid.square_index(t, 1), t, 1.0);                              // bottom
      c.emplace_back(grid.square_index(n, t), per_edge + t, 1.0);                   // right
      c.emplace_back(grid.square_index(t, n), 3 * per_edge - t, 1.0);               // top
      c.emplace_back(grid.square_index(1, t), 4 * per_edge - t, 1.0);               // left
    }
  } else {
    const int m = grid.angular_count();
    const double dr = grid.h();
    const double dth = kTwoPi / m;
    for (int i = 1; i <= n; ++i) {
      const double r = grid.ring_radius(i);
      const double c_out = dth * i;  // dtheta r_{i+1/2} / dr
      const double c_in = dth * (i - 1);
      const double c_ang = dr / (r * dth);
      for (int j = 0; j < m; ++j) {
        const int k = grid.disk_index(i, j);
        a.emplace_back(k, k, c_out + c_in + 2.0 * c_ang);
        a.emplace_back(k, grid.disk_index(i, j + 1), -c_ang);
        a.emplace_back(k, grid.disk_index(i, j - 1), -c_ang);
        if (i > 1) a.emplace_back(k, grid.disk_index(i - 1, j), -c_in);
        if (i < n)
          a.emplace_back(k, grid.disk_index(i + 1, j), -c_out);
        else
          c.emplace_back(k, j, c_out);
      }
    }
  }
  stiffness_.resize(N, N);
  stiffness_.setFromTriplets(a.begin(), a.end());
  coupling_.resize(N, Nb);
  coupling_.setFromTriplets(c.begin(), c.end());
  factor_.compute(stiffness_);
  require(factor_.info() == Eigen::Success, ErrorCode::internal, "Laplacian factorization failed");
}

std::vector<double> DirichletLaplacian::apply(std::span<const double> interior, std::span<const double> boundary) const {
  Eigen::Map<const Eigen::VectorXd> u(interior.data(), static_cast<Eigen::Index>(interior.size()));
  Eigen::VectorXd r = stiffness_ * u;
  if (!boundary.empty()) {
    Eigen::Map<const Eigen::VectorXd> b(boundary.data(), static_cast<Eigen::Index>(boundary.size()));
    r -= coupling_ * b;
  }
  std::vector<double> out(interior.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = r[static_cast<Eigen::Index>(k)] / weights_[k];
  return out;
}

std::vector<double> DirichletLaplacian::solve(std::span<const double> source, std::span<const double> boundary) const {
  const auto N = stiffness_.rows();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  if (!source.empty())
    for (Eigen::Index k = 0; k < N; ++k) rhs[k] = weights_[static_cast<std::size_t>(k)] * source[static_cast<std::size_t>(k)];
  if (!boundary.empty()) {
    Eigen::Map<const Eigen::VectorXd> b(boundary.data(), static_cast<Eigen::Index>(boundary.size()));
    rhs += coupling_ * b;
  }
  Eigen::VectorXd x = factor_.solve(rhs);
  return {x.data(), x.data() + x.size()};
}

Eigen::VectorXd DirichletLaplacian::solve_stiffness(const Eigen::VectorXd& rhs) const { return factor_.solve(rhs); }

std::vector<double> DirichletLaplacian::coupling_transpose(std::span<const double> interior) const {
  Eigen::Map<const Eigen::VectorXd> v(interior.data(), static_cast<Eigen::Index>(interior.size()));
  Eigen::VectorXd r = coupling_.transpose() * v;
  return {r.data(), r.data() + r.size()};
}

// ---------------------------------------------------------------------------
// ScalarField and grid functions

ScalarField ScalarField::zeros(GridPtr grid, bool with_boundary) {
  ScalarField f;
  f.values.assign(grid->interior_count(), 0.0);
  if (with_boundary) f.boundary.assign(grid->boundary_count(), 0.0);
  f.grid = std::move(grid);
  return f;
}

ScalarField ScalarField::from_function(GridPtr grid, const std::function<double(Point)>& fn, bool with_boundary) {
  ScalarField f;
  f.values.reserve(grid->interior_count());
  for (const Point& p : grid->interior_points()) f.values.push_back(fn(p));
  if (with_boundary) {
    f.boundary.reserve(grid->boundary_count());
    for (const BoundaryNode& b : grid->boundary_nodes()) f.boundary.push_back(fn(b.position));
  }
  f.grid = std::move(grid);
  return f;
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  require(a.grid && a.grid == b.grid, ErrorCode::grid_mismatch, "fields live on different grids");
}

ScalarField distance_field(const GridPtr& grid) {
  ScalarField f = ScalarField::zeros(grid);
  f.values.assign(grid->rho().begin(), grid->rho().end());
  return f;
}

std::vector<double> quadrature_weights(const Grid2D& grid, Weight weight) {
  std::vector<double> w(grid.cell_areas().begin(), grid.cell_areas().end());
  if (weight == Weight::rho)
    for (std::size_t k = 0; k < w.size(); ++k) w[k] *= grid.rho()[k];
  return w;
}

double integrate(const ScalarField& field) {
  const auto areas = field.grid->cell_areas();
  double s = 0.0;
  for (std::size_t k = 0; k < field.values.size(); ++k) s += field.values[k] * areas[k];
  return s;
}

double integrate(const ScalarField& field, const ScalarField& weight) {
  require_same_grid(field, weight);
  const auto areas = field.grid->cell_areas();
  double s = 0.0;
  for (std::size_t k = 0; k < field.values.size(); ++k) s += field.values[k] * weight.values[k] * areas[k];
  return s;
}

double integrate(const ScalarField& field, Weight weight) {
  const auto w = quadrature_weights(*field.grid, weight);
  double s = 0.0;
  for (std::size_t k = 0; k < field.values.size(); ++k) s += field.values[k] * w[k];
  return s;
}

const DirichletLaplacian& assemble_laplacian(const GridPtr& grid) { return grid->laplacian(); }

ScalarField apply_laplacian(const ScalarField& field) {
  require(field.has_boundary(), ErrorCode::missing_boundary, "apply_laplacian needs boundary values (Dirichlet closure)");
  const auto minus = field.grid->laplacian().apply(field.values, field.boundary);
  ScalarField out = ScalarField::zeros(field.grid, false);
  for (std::size_t k = 0; k < minus.size(); ++k) out.values[k] = -minus[k];
  return out;
}

Eigenpair first_eigenfunction(const GridPtr& grid, double tolerance, int max_iterations) {
  const DirichletLaplacian& L = grid->laplacian();
  const auto w = L.weights();
  const auto N = static_cast<Eigen::Index>(grid->interior_count());
  Eigen::VectorXd x(N);
  for (Eigen::Index k = 0; k < N; ++k) x[k] = grid->rho()[static_cast<std::size_t>(k)];
  Eigenpair out;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd rhs(N);
    for (Eigen::Index k = 0; k < N; ++k) rhs[k] = w[static_cast<std::size_t>(k)] * x[k];
    x = L.solve_stiffness(rhs);
    x /= x.cwiseAbs().maxCoeff();
    const Eigen::VectorXd Ax = L.stiffness() * x;
    double num = x.dot(Ax), den = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) den += w[static_cast<std::size_t>(k)] * x[k] * x[k];
    const double lambda = num / den;
    double res = 0.0;
    for (Eigen::Index k = 0; k < N; ++k)
      res = std::max(res, std::abs(Ax[k] / w[static_cast<std::size_t>(k)] - lambda * x[k]));
    res /= lambda;
    out.lambda = lambda;
    out.residual = res;
    out.iterations = it;
    if (res <= tolerance) {
      out.phi = ScalarField::zeros(grid);
      out.phi.values.assign(x.data(), x.data() + N);
      return out;
    }
  }
  fail(ErrorCode::nonconvergence, "inverse power iteration did not reach the residual tolerance");
}

namespace {

double closed_square_value(const ScalarField& f, int i, int j) {
  const Grid2D& g = *f.grid;
  const int n = g.n();
  if (i >= 1 && i <= n && j >= 1 && j <= n) return f.values[g.square_index(i, j)];
  if (!f.has_boundary()) return 0.0;
  return f.boundary[static_cast<std::size_t>(g.square_boundary_index(i, j))];
}

}  // namespace

double sample(const ScalarField& f, Point p) {
  const Grid2D& g = *f.grid;
  const int n = g.n();
  if (g.kind() == DomainKind::unit_square) {
    const double tx = std::clamp(p.x, 0.0, 1.0) / g.h();
    const double ty = std::clamp(p.y, 0.0, 1.0) / g.h();
    const int i0 = std::clamp(static_cast<int>(std::floor(tx)), 0, n);
    const int j0 = std::clamp(static_cast<int>(std::floor(ty)), 0, n);
    const double fx = tx - i0, fy = ty - j0;
    return (1 - fx) * (1 - fy) * closed_square_value(f, i0, j0) + fx * (1 - fy) * closed_square_value(f, i0 + 1, j0) +
           (1 - fx) * fy * closed_square_value(f, i0, j0 + 1) + fx * fy * closed_square_value(f, i0 + 1, j0 + 1);
  }
  const int m = g.angular_count();
  const double dth = kTwoPi / m;
  const double r = std::hypot(p.x, p.y);
  double th = std::atan2(p.y, p.x);
  if (th < 0) th += kTwoPi;
  const double tj = th / dth;
  const int j0 = static_cast<int>(std::floor(tj)) % m;
  const int j1 = (j0 + 1) % m;
  const double fj = tj - std::floor(tj);
  auto ring_value = [&](int ring, int j) -> double {
    if (ring >= n + 1) return f.has_boundary() ? f.boundary[static_cast<std::size_t>(j)] : 0.0;
    return f.values[g.disk_index(ring, j)];
  };
  auto ring_interp = [&](int ring) { return (1 - fj) * ring_value(ring, j0) + fj * ring_value(ring, j1); };
  const double t = std::min(r / g.h() + 0.5, n + 1.0);
  if (t < 1.0) {
    double centre = 0.0;
    for (int j = 0; j < m; ++j) centre += f.values[g.disk_index(1, j)];
    centre /= m;
    const double ft = (t - 0.5) / 0.5;
    return (1 - ft) * centre + ft * ring_interp(1);
  }
  const int i0 = std::min(static_cast<int>(std::floor(t)), n);
  const double ft = t - i0;
  return (1 - ft) * ring_interp(i0) + ft * ring_interp(i0 + 1);
}

std::string field_to_csv(const ScalarField& f) {
  std::ostringstream os;
  os << std::setprecision(17) << "x,y,value\n";
  const auto pts = f.grid->interior_points();
  for (std::size_t k = 0; k < f.values.size(); ++k) os << pts[k].x << ',' << pts[k].y << ',' << f.values[k] << '\n';
  if (f.has_boundary()) {
    const auto bn = f.grid->boundary_nodes();
    for (std::size_t k = 0; k < f.boundary.size(); ++k)
      os << bn[k].position.x << ',' << bn[k].position.y << ',' << f.boundary[k] << '\n';
  }
  return os.str();
}

}  // namespace semilab
