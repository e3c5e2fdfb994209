#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "semilab/error.hpp"
#include "semilab/grid.hpp"

#include <cmath>
#include <numbers>

using namespace semilab;

namespace {

constexpr double pi = std::numbers::pi;

double eigen_defect(int n) {
  auto g = Grid2D::build(DomainKind::unit_square, n);
  auto f = ScalarField::from_function(g, [](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); });
  auto lap = apply_laplacian(f);
  double err = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) err = std::max(err, std::abs(-lap.values[k] - 2 * pi * pi * f.values[k]));
  return err;
}

}  // namespace

TEST_CASE("square grid basics") {
  auto g = Grid2D::build(DomainKind::unit_square, 4);
  CHECK(g->interior_count() == 16);
  CHECK(g->h() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(g->interior_points()[g->square_index(2, 3)].x == doctest::Approx(0.4));
  CHECK(g->interior_points()[g->square_index(2, 3)].y == doctest::Approx(0.6));
  CHECK_THROWS_AS(Grid2D::build(DomainKind::unit_square, 3), Error);
}

TEST_CASE("boundary weights and normals") {
  for (int n : {4, 17, 64}) {
    for (auto kind : {DomainKind::unit_square, DomainKind::unit_disk}) {
      auto g = Grid2D::build(kind, n);
      double total = 0.0;
      for (const auto& b : g->boundary_nodes()) {
        total += b.weight;
        CHECK(std::abs(std::hypot(b.normal.x, b.normal.y) - 1.0) <= 1e-12);
      }
      if (kind == DomainKind::unit_square)
        CHECK(std::abs(total - 4.0) <= 1e-12);
      else
        CHECK(std::abs(total - 2 * pi) <= 1e-10);
    }
  }
}

TEST_CASE("boundary inner neighbours lie one spacing inward") {
  auto g = Grid2D::build(DomainKind::unit_square, 9);
  for (const auto& b : g->boundary_nodes()) {
    if (b.inner1 < 0) continue;
    const Point q = g->interior_points()[b.inner1];
    CHECK(q.x == doctest::Approx(b.position.x - g->h() * b.normal.x));
    CHECK(q.y == doctest::Approx(b.position.y - g->h() * b.normal.y));
  }
}

TEST_CASE("distance field") {
  auto g = Grid2D::build(DomainKind::unit_square, 9);
  auto rho = distance_field(g);
  CHECK(rho.values[g->square_index(5, 5)] == doctest::Approx(0.5));
  for (double v : rho.values) CHECK(v > 0.0);
  auto d = Grid2D::build(DomainKind::unit_disk, 16);
  CHECK(d->distance_to_boundary({0, 0}) == 1.0);
  auto rd = distance_field(d);
  for (std::size_t k = 0; k < rd.values.size(); ++k) {
    const Point p = d->interior_points()[k];
    CHECK(rd.values[k] == doctest::Approx(1.0 - std::hypot(p.x, p.y)));
  }
}

TEST_CASE("integrate rho approaches 1/6 at second order") {
  double prev = 0.0;
  for (int n : {31, 63, 127}) {
    auto g = Grid2D::build(DomainKind::unit_square, n);
    auto one = ScalarField::from_function(g, [](Point) { return 1.0; });
    const double err = std::abs(integrate(one, Weight::rho) - 1.0 / 6.0);
    CHECK(err <= 2.0 * g->h() * g->h());
    if (prev > 0) CHECK(prev / err > 3.0);
    prev = err;
    CHECK(std::abs(integrate(one) - 1.0) <= 2.0 * g->h() + 1e-12);
    CHECK(integrate(ScalarField::zeros(g)) == 0.0);
  }
}

TEST_CASE("quadrature linearity and grid mismatch") {
  auto g = Grid2D::build(DomainKind::unit_square, 20);
  auto f = ScalarField::from_function(g, [](Point p) { return std::exp(p.x) * p.y; });
  auto h = ScalarField::from_function(g, [](Point p) { return std::cos(3 * p.x + p.y); });
  ScalarField c = f;
  for (std::size_t k = 0; k < c.values.size(); ++k) c.values[k] = 2.5 * f.values[k] - 1.5 * h.values[k];
  CHECK(std::abs(integrate(c) - (2.5 * integrate(f) - 1.5 * integrate(h))) <= 1e-12);
  auto other = Grid2D::build(DomainKind::unit_square, 20);
  auto w = ScalarField::from_function(other, [](Point) { return 1.0; });
  CHECK_THROWS_AS(integrate(f, w), Error);
}

TEST_CASE("laplacian stencil checks") {
  auto g = Grid2D::build(DomainKind::unit_square, 30);
  auto q = ScalarField::from_function(g, [](Point p) { return p.x * p.x + p.y * p.y; });
  auto lap = apply_laplacian(q);
  for (double v : lap.values) CHECK(v == doctest::Approx(4.0).epsilon(1e-9));
  auto c = ScalarField::from_function(g, [](Point) { return 3.25; });
  for (double v : apply_laplacian(c).values) CHECK(std::abs(v) <= 1e-12);
  ScalarField nob = q;
  nob.boundary.clear();
  CHECK_THROWS_AS(apply_laplacian(nob), Error);

  auto d = Grid2D::build(DomainKind::unit_disk, 32);
  auto cd = ScalarField::from_function(d, [](Point) { return -2.0; });
  // Ring-1 cells are tiny, so roundoff is amplified by 1/area there.
  for (double v : apply_laplacian(cd).values) CHECK(std::abs(v) <= 1e-8);
}

TEST_CASE("eigenfunction refinement order") {
  const double e32 = eigen_defect(32), e64 = eigen_defect(64), e128 = eigen_defect(128);
  CHECK(std::log2(e32 / e64) >= 1.9);
  CHECK(std::log2(e64 / e128) >= 1.9);
}

TEST_CASE("discrete Green identity") {
  auto g = Grid2D::build(DomainKind::unit_square, 25);
  auto f = ScalarField::from_function(g, [](Point p) { return p.x * (1 - p.x) * std::exp(p.y) * p.y * (1 - p.y); });
  auto k = ScalarField::from_function(g, [](Point p) { return std::sin(2 * pi * p.x) * p.y * (1 - p.y); });
  for (auto* s : {&f, &k}) std::fill(s->boundary.begin(), s->boundary.end(), 0.0);
  CHECK(std::abs(integrate(apply_laplacian(f), k) - integrate(f, apply_laplacian(k))) <= 1e-10);

  auto d = Grid2D::build(DomainKind::unit_disk, 20);
  auto a = ScalarField::from_function(d, [](Point p) { return (1 - p.x * p.x - p.y * p.y) * std::exp(p.x); });
  auto b = ScalarField::from_function(d, [](Point p) { return (1 - p.x * p.x - p.y * p.y) * p.y; });
  for (auto* s : {&a, &b}) std::fill(s->boundary.begin(), s->boundary.end(), 0.0);
  CHECK(std::abs(integrate(apply_laplacian(a), b) - integrate(a, apply_laplacian(b))) <= 1e-10);
}

TEST_CASE("first eigenfunction") {
  auto g = Grid2D::build(DomainKind::unit_square, 63);
  auto e = first_eigenfunction(g);
  CHECK(e.residual <= 1e-10);
  CHECK(std::abs(e.lambda - 2 * pi * pi) <= 2.0 * g->h() * g->h() * 2 * pi * pi);
  CHECK(e.phi.values[g->square_index(32, 32)] == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : e.phi.values) CHECK(v >= 0.0);
}

TEST_CASE("dyadic tree partitions Q0") {
  auto g = Grid2D::build(DomainKind::unit_square, 63);
  const auto& t = g->dyadic();
  CHECK(t.depth == 6);
  CHECK(t.leaf_count() == 4096);
  for (int d = 0; d <= t.depth; ++d) {
    std::vector<int> count(std::size_t{1} << (2 * d), 0);
    for (std::size_t leaf = 0; leaf < t.leaf_count(); ++leaf) ++count[t.ancestor(leaf, d)];
    for (int c : count) CHECK(c == (1 << (2 * (t.depth - d))));
  }
  auto d = Grid2D::build(DomainKind::unit_disk, 16);
  CHECK(d->dyadic().origin.x == -1.0);
  CHECK(d->dyadic().side == 2.0);
}

TEST_CASE("nearest node ties and sampling") {
  auto g = Grid2D::build(DomainKind::unit_square, 8);
  CHECK(g->nearest_interior_nodes({0.5, 0.5}).size() == 4);
  auto d = Grid2D::build(DomainKind::unit_disk, 8);
  CHECK(d->nearest_interior_nodes({0, 0}).size() == static_cast<std::size_t>(d->angular_count()));
  auto f = ScalarField::from_function(g, [](Point p) { return 2 * p.x + 3 * p.y + 1; });
  CHECK(sample(f, {0.37, 0.81}) == doctest::Approx(2 * 0.37 + 3 * 0.81 + 1));
  CHECK(sample(f, {0.0, 1.0}) == doctest::Approx(4.0));
  CHECK(field_to_csv(f).rfind("x,y,value\n", 0) == 0);
}
