#pragma once

// Structured 2-D model domains: the unit square (uniform Cartesian nodes) and
// the unit disk (cell-centred polar rings). Interior unknowns, an ordered
// boundary node set with arclength weights, the distance field, a dyadic cube
// hierarchy over an enclosing cube Q0, and the Dirichlet-eliminated 5-point
// Laplacian.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace semilab {

enum class DomainKind { unit_square, unit_disk };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct BoundaryNode {
  double s = 0.0;       // arclength position, counterclockwise from the parametrization origin
  Point position;
  Point normal;         // outward unit normal
  double weight = 0.0;  // arclength weight
  int inner1 = -1;      // interior node one spacing inward along the normal (-1 at square corners)
  int inner2 = -1;      // two spacings inward
};

using SparseMatrix = Eigen::SparseMatrix<double>;

class Grid2D;

// Dirichlet-eliminated discrete Laplacian. With W the quadrature weights,
// stiffness() is W(-Delta_h) restricted to interior unknowns (SPD) and
// coupling() carries the boundary columns, so that
//   W (-Delta_h u) = stiffness() u_int - coupling() u_bdry.
class DirichletLaplacian {
 public:
  explicit DirichletLaplacian(const Grid2D& grid);

  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& coupling() const { return coupling_; }
  std::span<const double> weights() const { return weights_; }

  // -Delta_h u at interior nodes.
  std::vector<double> apply(std::span<const double> interior, std::span<const double> boundary) const;
  // Solves -Delta_h u = source in the interior with u = boundary on the boundary nodes.
  std::vector<double> solve(std::span<const double> source, std::span<const double> boundary) const;
  // Solves stiffness() x = rhs.
  Eigen::VectorXd solve_stiffness(const Eigen::VectorXd& rhs) const;
  // coupling()^T applied to an interior vector.
  std::vector<double> coupling_transpose(std::span<const double> interior) const;

 private:
  SparseMatrix stiffness_;
  SparseMatrix coupling_;
  std::vector<double> weights_;
  Eigen::SimplicialLDLT<SparseMatrix> factor_;
};

struct DyadicTree {
  Point origin;         // lower-left corner of Q0
  double side = 1.0;    // side length of Q0
  int depth = 0;        // D
  int leaves_per_axis = 1;

  std::size_t leaf_count() const;
  double leaf_side() const { return side / leaves_per_axis; }
  // Half-open leaf containing p, clamped into Q0.
  std::size_t leaf_of(Point p) const;
  // Cube of the given depth containing the leaf (row-major at that depth).
  std::size_t ancestor(std::size_t leaf, int level) const;
};

class Grid2D {
 public:
  static std::shared_ptr<const Grid2D> build(DomainKind kind, int n);

  Grid2D(const Grid2D&) = delete;
  Grid2D& operator=(const Grid2D&) = delete;

  DomainKind kind() const { return kind_; }
  int n() const { return n_; }
  // Square: node spacing. Disk: radial spacing.
  double h() const { return h_; }
  // Disk: number of angular nodes per ring. Square: n.
  int angular_count() const { return m_; }
  double perimeter() const;

  std::size_t interior_count() const { return points_.size(); }
  std::size_t boundary_count() const { return boundary_.size(); }
  std::span<const Point> interior_points() const { return points_; }
  std::span<const double> cell_areas() const { return areas_; }
  std::span<const double> rho() const { return rho_; }
  std::span<const BoundaryNode> boundary_nodes() const { return boundary_; }

  // Square: interior index of node (i, j), 1 <= i, j <= n, at (ih, jh).
  int square_index(int i, int j) const { return (i - 1) + (j - 1) * n_; }
  // Disk: interior index of ring i (1..n), angle j (0..m-1).
  int disk_index(int ring, int angle) const;
  double ring_radius(int ring) const { return (ring - 0.5) * h_; }
  // Square: boundary node index of closed-grid position (i, j) with i or j in {0, n+1}.
  int square_boundary_index(int i, int j) const;

  Point boundary_point(double s) const;
  double wrap_arclength(double s) const;
  double distance_to_boundary(Point p) const;
  bool contains(Point p) const;

  int nearest_boundary_node(double s) const;
  // All interior nodes within a relative tie tolerance of the minimal distance.
  std::vector<int> nearest_interior_nodes(Point p) const;

  const DirichletLaplacian& laplacian() const;
  // Discrete torsion function: -Delta_h z = 1 with z = 0 on the boundary (computed once).
  std::span<const double> torsion() const;
  const DyadicTree& dyadic() const { return tree_; }

 private:
  Grid2D(DomainKind kind, int n);
  void build_square();
  void build_disk();

  DomainKind kind_;
  int n_ = 0;
  int m_ = 0;
  double h_ = 0.0;
  std::vector<Point> points_;
  std::vector<double> areas_;
  std::vector<double> rho_;
  std::vector<BoundaryNode> boundary_;
  DyadicTree tree_;

  mutable std::once_flag laplacian_once_;
  mutable std::unique_ptr<DirichletLaplacian> laplacian_;
  mutable std::once_flag torsion_once_;
  mutable std::vector<double> torsion_;
};

using GridPtr = std::shared_ptr<const Grid2D>;

// Grid-sampled function. `boundary` is either empty (no Dirichlet closure) or
// holds one value per boundary node.
struct ScalarField {
  GridPtr grid;
  std::vector<double> values;
  std::vector<double> boundary;
  bool blowup_record = false;

  static ScalarField zeros(GridPtr grid, bool with_boundary = true);
  static ScalarField from_function(GridPtr grid, const std::function<double(Point)>& f, bool with_boundary = true);

  bool has_boundary() const { return !boundary.empty(); }
  double max_abs() const;
};

void require_same_grid(const ScalarField& a, const ScalarField& b);

ScalarField distance_field(const GridPtr& grid);

enum class Weight { lebesgue, rho };
std::string to_string(Weight w);
Weight weight_from_string(const std::string& name);

// Node value times cell area over interior nodes.
double integrate(const ScalarField& field);
double integrate(const ScalarField& field, const ScalarField& weight);
double integrate(const ScalarField& field, Weight weight);
// Combined quadrature weight per interior node (area, optionally times rho).
std::vector<double> quadrature_weights(const Grid2D& grid, Weight weight);

ScalarField apply_laplacian(const ScalarField& field);
const DirichletLaplacian& assemble_laplacian(const GridPtr& grid);

struct Eigenpair {
  ScalarField phi;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
};
Eigenpair first_eigenfunction(const GridPtr& grid, double tolerance = 1e-10, int max_iterations = 500);

// Bilinear (square) or polar bilinear (disk) interpolation; boundary values
// are used when present and taken as 0 otherwise.
double sample(const ScalarField& field, Point p);

// CSV rows "x,y,value" for interior nodes followed by boundary nodes (when set).
std::string field_to_csv(const ScalarField& field);

}  // namespace semilab
