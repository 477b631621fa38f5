#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wavenl/error.hpp"
#include "wavenl/field.hpp"
#include "wavenl/geometry.hpp"
#include "wavenl/numerics.hpp"

using namespace wavenl;
constexpr double pi = std::numbers::pi;

TEST_CASE("boundary distance examples") {
  CHECK(Domain::rectangle(1, 1).boundary_distance({0.3, 0.2}) == doctest::Approx(0.2));
  CHECK(Domain::interval(pi).boundary_distance({pi / 4, 0}) == doctest::Approx(pi / 4));
  CHECK(Domain::disk(1).boundary_distance({0.5, 0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(Domain::disk(1).boundary_distance({1.5, 0}), Error);
}

TEST_CASE("boundary normal coordinates examples") {
  const auto rect = Domain::rectangle(1, 1);
  const auto c = rect.normal_coords({0.3, 0.2});
  CHECK(c.face == 0);
  CHECK(c.s == doctest::Approx(0.3));
  CHECK(c.depth == doctest::Approx(0.2));
  const auto b = rect.normal_coords({1.0, 0.6});
  CHECK(b.depth == doctest::Approx(0.0));
  const auto p = rect.exp_boundary(b.face, b.s, 0.0);
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(0.6));
  const auto d = Domain::disk(1).normal_coords({0.5, 0});
  CHECK(d.s == doctest::Approx(0.0));
  CHECK(d.depth == doctest::Approx(0.5));
  try {
    Domain::rectangle(1, 1, 0.1).normal_coords({0.5, 0.5});
    FAIL("expected collar error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::collar);
  }
}

TEST_CASE("collar width must stay below the injectivity threshold") {
  CHECK_THROWS_AS(Domain::rectangle(1, 2, 0.6), Error);
  CHECK_THROWS_AS(Domain::disk(1, 1.0), Error);
  CHECK_NOTHROW(Domain::disk(1, 0.99));
  CHECK_THROWS_AS(Domain::rectangle(0, 1), Error);
}

TEST_CASE("metric factor") {
  CHECK(Domain::rectangle(1, 1).beta(0, 0.4, 0.3) == 1.0);
  const auto disk = Domain::disk(1);
  CHECK(disk.beta(0, 0.0, 0.0) == doctest::Approx(1.0));
  for (double depth : {0.1, 0.3, 0.6}) {
    CHECK(disk.beta(0, 0.7, depth) == doctest::Approx((1 - depth) * (1 - depth)));
    // Pullback of the Euclidean metric along the parallel curve at this depth.
    const double h = 1e-6, s = 0.7;
    const Point a = disk.exp_boundary(0, s - h, depth), b = disk.exp_boundary(0, s + h, depth);
    const double g0 = (std::pow(b.x - a.x, 2) + std::pow(b.y - a.y, 2)) / (4 * h * h);
    CHECK(g0 == doctest::Approx(disk.beta(0, s, depth)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(disk.beta(0, 0.0, 0.95), Error);
}

TEST_CASE("eikonal and round trip on collar grid points") {
  for (const Domain& d : {Domain::rectangle(1, 0.8), Domain::disk(1.0), Domain::interval(pi)}) {
    const SpatialGrid g(d, {32, 48});
    const double h = g.max_spacing();
    const double e = 1e-4;
    int checked = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point p = g.node(k);
      const double dist = d.boundary_distance(p);
      if (!(dist < d.collar_width()) || dist < 2 * e) continue;
      const FaceCoords c = d.normal_coords(p);
      const Point back = d.exp_boundary(c.face, c.s, c.depth);
      CHECK(std::hypot(back.x - p.x, back.y - p.y) <= 2 * h);
      // Skip points whose nearest face is not unique within the stencil.
      bool unique = true;
      for (int f = 0; f < d.face_count(); ++f)
        if (f != c.face && d.face_coords(f, p).depth < c.depth + 2 * e + 1e-12) unique = false;
      if (!unique) continue;
      double gx = (d.boundary_distance({p.x + e, p.y}) - d.boundary_distance({p.x - e, p.y})) / (2 * e);
      double gy = 0;
      if (d.dimension() == 2)
        gy = (d.boundary_distance({p.x, p.y + e}) - d.boundary_distance({p.x, p.y - e})) / (2 * e);
      CHECK(std::hypot(gx, gy) == doctest::Approx(1.0).epsilon(h));
      ++checked;
    }
    CHECK(checked > 10);
  }
}

TEST_CASE("portions") {
  auto d = Domain::rectangle(1, 1);
  d.add_portion({"gamma", 0, 0.2, 0.6});
  CHECK(d.in_portion(d.portion("gamma"), 0, 0.4));
  CHECK_FALSE(d.in_portion(d.portion("gamma"), 0, 0.7));
  CHECK_FALSE(d.in_portion(d.portion("gamma"), 2, 0.4));
  CHECK_THROWS_AS(d.add_portion({"bad", 0, 0.5, 0.5}), Error);
  CHECK_THROWS_AS(d.portion("missing"), Error);
  auto disk = Domain::disk(1);
  disk.add_portion({"arc", 0, -0.5, 0.5});
  CHECK(disk.in_portion(disk.portion("arc"), 0, 2 * pi - 0.2));
  CHECK_FALSE(disk.in_portion(disk.portion("arc"), 0, pi));
}

TEST_CASE("grid invariants") {
  const SpatialGrid g(Domain::interval(pi), {16, 0});
  CHECK_THROWS_AS(SpatialGrid(Domain::interval(pi), {4, 0}), Error);
  CHECK_THROWS_AS(SpaceTimeGrid(g, 4, 1.0), Error);
  CHECK_THROWS_AS(SpaceTimeGrid(g, 8, 10.0), Error);  // CFL
  const auto st = SpaceTimeGrid::with_cfl(g, 1.0);
  CHECK(st.dt() <= 0.5 * g.min_spacing() + 1e-15);
  // Quadrature weights integrate the area exactly.
  const SpatialGrid disk(Domain::disk(1.5), {10, 24});
  std::vector<double> one(disk.size(), 1.0);
  CHECK(disk.integrate(one) == doctest::Approx(pi * 1.5 * 1.5));
}

namespace {
double eigenmode_residual(int nx) {
  const SpatialGrid g(Domain::interval(pi), {nx, 0});
  const auto grid = SpaceTimeGrid::with_cfl(g, 1.0);
  std::vector<double> v(static_cast<std::size_t>(grid.levels()) * g.size());
  for (int n = 0; n < grid.levels(); ++n)
    for (std::size_t k = 0; k < g.size(); ++k)
      v[static_cast<std::size_t>(n) * g.size() + k] = std::sin(g.node(k).x) * std::cos(grid.time(n));
  return apply_wave_operator(WaveField::from_real(grid, v)).max_abs();
}
}  // namespace

TEST_CASE("wave operator examples") {
  const double r1 = eigenmode_residual(32), r2 = eigenmode_residual(64), r3 = eigenmode_residual(128);
  CHECK(r1 < 1e-2);
  const double order = std::log2(r2 / r3);
  CHECK(order >= 1.9);
  CHECK(std::log2(r1 / r2) >= 1.9);

  {
    const SpatialGrid g(Domain::interval(1.0), {16, 0});
    const auto grid = SpaceTimeGrid::with_cfl(g, 1.0);
    std::vector<double> v(static_cast<std::size_t>(grid.levels()) * g.size());
    for (int n = 0; n < grid.levels(); ++n)
      for (std::size_t k = 0; k < g.size(); ++k)
        v[static_cast<std::size_t>(n) * g.size() + k] = grid.time(n) * grid.time(n);
    const auto r = apply_wave_operator(WaveField::from_real(grid, v));
    for (int n = 0; n < grid.levels(); ++n) CHECK(r.real_at(n, 5) == doctest::Approx(2.0));
  }
  {
    const SpatialGrid g(Domain::rectangle(1, 1), {32, 32});
    const auto grid = SpaceTimeGrid::with_cfl(g, 0.5);
    const double w = std::sqrt(2.0) * pi;
    std::vector<double> v(static_cast<std::size_t>(grid.levels()) * g.size());
    for (int n = 0; n < grid.levels(); ++n)
      for (std::size_t k = 0; k < g.size(); ++k) {
        const Point p = g.node(k);
        v[static_cast<std::size_t>(n) * g.size() + k] =
            std::sin(pi * p.x) * std::sin(pi * p.y) * std::cos(w * grid.time(n));
      }
    CHECK(apply_wave_operator(WaveField::from_real(grid, v)).max_abs() < 0.15);
  }
}

TEST_CASE("disk laplacian is second order on a smooth field") {
  auto err = [](int nr, double rmin) {
    const SpatialGrid g(Domain::disk(1.0), {nr, 4 * nr});
    std::vector<double> u(g.size()), lap(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point p = g.node(k);
      u[k] = p.x * p.x * p.y + std::cos(p.x);
    }
    g.laplacian(u, lap);
    double e = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g.is_boundary(k)) continue;
      const Point p = g.node(k);
      if (std::hypot(p.x, p.y) < rmin) continue;
      e = std::max(e, std::abs(lap[k] - (2 * p.y - std::cos(p.x))));
    }
    return e;
  };
  CHECK(err(32, 0.25) < 1e-2);
  CHECK(err(16, 0.25) / err(32, 0.25) > 3.5);
  // The first ring next to the center is only first order.
  CHECK(err(32, 0.0) < 0.02);
  CHECK(err(16, 0.0) / err(32, 0.0) > 1.8);
}

TEST_CASE("field binary round trip") {
  const SpatialGrid g(Domain::rectangle(1, 2), {8, 10});
  const SpaceTimeGrid grid(g, 20, 0.5);
  WaveField f(grid, true);
  for (int n = 0; n < grid.levels(); ++n)
    for (std::size_t k = 0; k < g.size(); ++k) f.set(n, k, Complex(n + 0.1 * k, -1.0 / (1 + k)));
  const auto path = std::filesystem::temp_directory_path() / "wavenl_field.bin";
  f.write_binary(path);
  const auto back = WaveField::read_binary(path, grid);
  CHECK(back.real_values() == f.real_values());
  CHECK(back.imag_values() == f.imag_values());
  std::filesystem::remove(path);
}
