#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "semilab/error.hpp"
#include "semilab/measures.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numeric>

using namespace semilab;
using testsupport::pi;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Composite midpoint rule on a capped piece, for cross-checking the closed forms.
double midpoint(const DensityPiece& d, double a, double b, int m = 2000000) {
  const double dx = (b - a) / m;
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += d.value(a + (i + 0.5) * dx);
  return s * dx;
}

BoundaryMeasure mixed() {
  BoundaryMeasure mu;
  mu.atoms.push_back({0.3, 1.5, {}});
  mu.atoms.push_back({3.9, 0.25, {}});
  mu.density.push_back({DensityKind::inverse_sqrt, 1.0, 1.7, 0.8, {}, 4.0});
  mu.density.push_back({DensityKind::sine_bump, 2.1, 2.9, 3.0, {}});
  mu.density.push_back({DensityKind::table, 3.0, 3.6, 0.0, {1.0, 0.0, 2.5}});
  mu.cantor.push_back({0.5, 0.95, 2.0, 4});
  return mu;
}

}  // namespace

TEST_CASE("Lebesgue decomposition") {
  BoundaryMeasure dens;
  dens.density.push_back({DensityKind::constant, 0.0, 2 * pi, 1.0});
  auto d1 = lebesgue_decompose(dens);
  CHECK(d1.singular.total_variation() == 0.0);
  BoundaryMeasure atom;
  atom.atoms.push_back({1.0, 1.0, {}});
  auto d2 = lebesgue_decompose(atom);
  CHECK(d2.regular.total_variation() == 0.0);
  BoundaryMeasure both = dens;
  both.atoms = atom.atoms;
  auto d3 = lebesgue_decompose(both);
  CHECK(d3.singular.total_variation() == 1.0);
  CHECK(d3.regular.total_variation() == doctest::Approx(2 * pi).epsilon(1e-14));
  auto back = recombine(lebesgue_decompose(mixed()));
  auto g = Grid2D::build(DomainKind::unit_square, 40);
  auto w0 = discretize_boundary(mixed(), *g), w1 = discretize_boundary(back, *g);
  for (std::size_t b = 0; b < w0.size(); ++b) CHECK(w0[b] == w1[b]);
}

TEST_CASE("truncation") {
  BoundaryMeasure three;
  three.density.push_back({DensityKind::constant, 0.0, 1.0, 3.0});
  auto t2 = truncate_regular(three, 2.0);
  CHECK(t2.density_at(0.5) == 2.0);
  CHECK(truncate_regular(three, 0.0).total_variation() == 0.0);
  CHECK(truncate_regular(three, 5.0).total_variation() == 3.0);
  BoundaryMeasure isq;
  isq.density.push_back({DensityKind::inverse_sqrt, 0.0, 1.0, 1.0});
  const double tv = truncate_regular(isq, 10.0).total_variation();
  // Split at s = 1/k^2: k * (1/k^2) + 2 (1 - 1/k) = 2 - 1/k.
  CHECK(tv == doctest::Approx(2.0 - 1.0 / 10.0).epsilon(1e-14));
  CHECK(std::abs(midpoint(truncate_regular(isq, 10.0).density[0], 0.0, 1.0) - tv) <= 1e-8);
  CHECK_THROWS_AS(truncate_regular(mixed(), 1.0), Error);
}

TEST_CASE("closed-form piece integrals") {
  DensityPiece bump{DensityKind::sine_bump, 0.5, 1.3, 2.0};
  CHECK(bump.total() == doctest::Approx(0.8).epsilon(1e-14));
  for (double cap : {0.3, 1.0, 1.9}) {
    DensityPiece b = bump;
    b.cap = cap;
    CHECK(std::abs(b.integral(0.6, 1.25) - midpoint(b, 0.6, 1.25)) <= 1e-9);
  }
  DensityPiece isq{DensityKind::inverse_sqrt, 1.0, 2.0, 0.5, {}, 3.0};
  CHECK(std::abs(isq.integral(1.01, 1.7) - midpoint(isq, 1.01, 1.7)) <= 1e-9);
  DensityPiece tab{DensityKind::table, 0.0, 1.0, 0.0, {1.0, 4.0, 2.0, 0.5}, 3.0};
  CHECK(tab.integral(0.1, 0.9) == doctest::Approx(0.15 + 0.75 + 0.5 + 0.075).epsilon(1e-14));
}

TEST_CASE("boundary discretization") {
  auto disk = Grid2D::build(DomainKind::unit_disk, 64);
  BoundaryMeasure atom;
  atom.atoms.push_back({1.0, 1.0, {}});
  auto wa = discretize_boundary(atom, *disk);
  CHECK(std::count_if(wa.begin(), wa.end(), [](double x) { return x != 0; }) == 1);
  CHECK(sum(wa) == 1.0);

  BoundaryMeasure uni;
  uni.density.push_back({DensityKind::constant, 0.0, 2 * pi, 1.0});
  auto wu = discretize_boundary(uni, *disk);
  for (std::size_t b = 0; b < wu.size(); ++b) CHECK(wu[b] == doctest::Approx(disk->boundary_nodes()[b].weight).epsilon(1e-12));
  CHECK(std::abs(sum(wu) - 2 * pi) <= 1e-10);

  auto fine = Grid2D::build(DomainKind::unit_disk, 128);
  BoundaryMeasure c;
  c.cantor.push_back({0.0, 0.9 * 2 * pi, 1.0, 5});
  auto wc = discretize_boundary(c, *fine);
  int count = 0;
  for (double x : wc)
    if (x != 0) {
      ++count;
      CHECK(x == doctest::Approx(1.0 / 32).epsilon(1e-15));
    }
  CHECK(count == 32);
  const auto centres = c.cantor[0].centres();
  CHECK(centres.size() == 32);
  CHECK(centres.front() == doctest::Approx(0.9 * 2 * pi / 486.0));
}

TEST_CASE("mass conservation") {
  for (auto kind : {DomainKind::unit_square, DomainKind::unit_disk})
    for (int n : {8, 33, 100}) {
      auto g = Grid2D::build(kind, n);
      auto mu = mixed();
      CHECK(std::abs(sum(discretize_boundary(mu, *g)) - mu.total_variation()) <= 1e-12);
    }
}

TEST_CASE("atom placement") {
  auto g = Grid2D::build(DomainKind::unit_square, 19);
  BoundaryMeasure ok;
  ok.atoms.push_back({0, 2.0, Point{0.5, 0.01}});
  auto w = discretize_boundary(ok, *g);
  CHECK(w[static_cast<std::size_t>(g->nearest_boundary_node(0.5))] == 2.0);
  BoundaryMeasure off;
  off.atoms.push_back({0, 1.0, Point{0.5, 0.2}});
  CHECK_THROWS_AS(discretize_boundary(off, *g), Error);
}

TEST_CASE("measure of sets") {
  auto disk = Grid2D::build(DomainKind::unit_disk, 64);
  BoundaryMeasure uni;
  uni.density.push_back({DensityKind::constant, 0.0, 2 * pi, 1.0});
  auto w = discretize_boundary(uni, *disk);
  CHECK(measure_of_set(w, boundary_nodes_in(*disk, {{0.0, 2 * pi}})) == doctest::Approx(2 * pi).epsilon(1e-12));
  CHECK(measure_of_set(w, {}) == 0.0);
  const double half = measure_of_set(w, boundary_nodes_in(*disk, {{0.0, pi}}));
  // Closed arc: both endpoint nodes count.
  CHECK(std::abs(half - pi) <= 2 * pi / disk->angular_count() + 1e-12);
  // Wrapping arc.
  auto sq = Grid2D::build(DomainKind::unit_square, 9);
  CHECK(boundary_nodes_in(*sq, {{3.85, 0.25}}).size() == 4);
}

TEST_CASE("truncation is monotone in k nodewise") {
  auto g = Grid2D::build(DomainKind::unit_square, 63);
  BoundaryMeasure isq;
  isq.density.push_back({DensityKind::inverse_sqrt, 0.2, 0.8, 1.0});
  std::vector<double> prev(g->boundary_count(), 0.0);
  for (double k = 1; k <= 1024; k *= 2) {
    auto w = discretize_boundary(truncate_regular(isq, k), *g);
    for (std::size_t b = 0; b < w.size(); ++b) CHECK(w[b] >= prev[b]);
    prev = w;
  }
}

TEST_CASE("interior discretization") {
  auto g = Grid2D::build(DomainKind::unit_square, 31);
  InteriorMeasure d;
  d.atoms.push_back({{0.5, 0.5}, 3.0});
  auto s = discretize_interior(d, *g);
  CHECK(s[static_cast<std::size_t>(g->square_index(16, 16))] == doctest::Approx(3.0 / (g->h() * g->h())).epsilon(1e-14));
  CHECK(std::count_if(s.begin(), s.end(), [](double x) { return x != 0; }) == 1);
  InteriorMeasure one;
  one.density = [](Point) { return 1.0; };
  for (double v : discretize_interior(one, *g)) CHECK(v == 1.0);
  InteriorMeasure two;
  two.atoms.push_back({{0.25, 0.25}, 1.25});
  two.atoms.push_back({{0.75, 0.5}, 2.5});
  auto s2 = discretize_interior(two, *g);
  std::vector<int> all(g->interior_count());
  std::iota(all.begin(), all.end(), 0);
  CHECK(interior_measure_of_set(s2, *g, all) == doctest::Approx(3.75).epsilon(1e-14));
  InteriorMeasure near;
  near.atoms.push_back({{0.02, 0.5}, 1.0});
  CHECK_THROWS_AS(discretize_interior(near, *g), Error);

  auto disk = Grid2D::build(DomainKind::unit_disk, 16);
  InteriorMeasure centre;
  centre.atoms.push_back({{0.0, 0.0}, 2.0});
  auto sd = discretize_interior(centre, *disk);
  std::vector<int> alld(disk->interior_count());
  std::iota(alld.begin(), alld.end(), 0);
  CHECK(interior_measure_of_set(sd, *disk, alld) == doctest::Approx(2.0).epsilon(1e-12));
}
