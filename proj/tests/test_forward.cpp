#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wavenl/error.hpp"
#include "wavenl/forward.hpp"

using namespace wavenl;
constexpr double pi = std::numbers::pi;

namespace {

SpaceTimeGrid interval_grid(double L, int nx, double T, double cfl = 0.5) {
  return SpaceTimeGrid::with_cfl(SpatialGrid(Domain::interval(L), {nx, 0}), T, cfl);
}

double max_error(const WaveField& u, const std::function<double(double, Point)>& exact) {
  const auto& g = u.grid();
  double e = 0.0;
  for (int n = 0; n < g.levels(); ++n)
    for (std::size_t k = 0; k < g.space().size(); ++k)
      e = std::max(e, std::abs(u.real_at(n, k) - exact(g.time(n), g.space().node(k))));
  return e;
}

DirichletData eigen_data(double amp) {
  return {[](double, Point) { return 0.0; }, [amp](Point p) { return amp * std::sin(p.x); },
          [](Point) { return 0.0; }};
}

Nonlinearity manufactured() {
  Nonlinearity F;
  F.name = "manufactured";
  F.eval = [](double t, Point x, double u) {
    const double s = std::sin(x.x) * std::cos(t);
    return u * u * u - s * s * s;
  };
  F.du = [](double, Point, double u) { return 3 * u * u; };
  F.growth_b = 3;
  return F;
}

}  // namespace

TEST_CASE("lifting examples") {
  const auto grid = interval_grid(1.0, 32, 1.0);
  const auto c = lift_data(DirichletData::constant(0.7), grid);
  CHECK(max_error(c, [](double, Point) { return 0.7; }) < 1e-10);
  CHECK(lift_data(DirichletData::zero(), grid).max_abs() == 0.0);

  DirichletData d{[](double, Point) { return 0.0; }, [](Point p) { return std::sin(pi * p.x); },
                  [](Point) { return 0.0; }};
  // sin(pi x) violates the third condition (lap u0 != 0 on the boundary is fine
  // here since it vanishes at x = 0, 1), so every condition holds.
  const auto G = lift_data(d, grid);
  const auto& g = grid.space();
  const double tol = 10 * (g.max_spacing() * g.max_spacing() + grid.dt() * grid.dt());
  for (std::size_t k = 0; k < g.size(); ++k)
    CHECK(std::abs(G.real_at(0, k) - std::sin(pi * g.node(k).x)) <= tol);
  for (int n = 0; n < grid.levels(); ++n) {
    CHECK(std::abs(G.real_at(n, 0)) <= tol);
    CHECK(std::abs(G.real_at(n, g.size() - 1)) <= tol);
  }
}

TEST_CASE("lifting rejects incompatible data") {
  const auto grid = interval_grid(1.0, 16, 1.0);
  DirichletData d{[](double, Point) { return 1.0; }, [](Point) { return 0.0; },
                  [](Point) { return 0.0; }};
  try {
    lift_data(d, grid);
    FAIL("expected compatibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::compatibility);
    CHECK(e.detail("condition", -1) == 1);
  }
}

TEST_CASE("semilinear solver examples") {
  const auto grid = interval_grid(pi, 32, 1.0);
  const auto u = solve_semilinear(catalog::zero(), DirichletData::constant(1.5), grid);
  CHECK(max_error(u, [](double, Point) { return 1.5; }) < 1e-13);

  const auto m = solve_semilinear(manufactured(), eigen_data(1.0), grid);
  CHECK(max_error(m, [](double t, Point x) { return std::sin(x.x) * std::cos(t); }) < 5e-3);
}

TEST_CASE("manufactured solution converges at second order") {
  std::vector<double> errs;
  for (int nx : {20, 40, 80}) {
    const auto u = solve_semilinear(manufactured(), eigen_data(1.0), interval_grid(pi, nx, 1.0));
    errs.push_back(max_error(u, [](double t, Point x) { return std::sin(x.x) * std::cos(t); }));
  }
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    const double ratio = errs[i] / errs[i + 1];
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("semilinear solver agrees with the spectral oracle") {
  const auto grid = interval_grid(pi, 64, 1.0);
  const auto data = eigen_data(1e-2);
  const auto fd = solve_semilinear(catalog::cubic(), data, grid);
  const auto sp = picard_duhamel_solve(catalog::cubic(), data, grid);
  double diff = 0, ref = 0;
  for (std::size_t i = 0; i < fd.real_values().size(); ++i) {
    diff = std::max(diff, std::abs(fd.real_values()[i] - sp.u.real_values()[i]));
    ref = std::max(ref, std::abs(sp.u.real_values()[i]));
  }
  CHECK(diff / ref <= 1e-3);
  CHECK(sp.iterations >= 2);
  CHECK(sp.contraction_ratio < 0.5);
}

TEST_CASE("spectral oracle eigenmodes") {
  const auto grid = interval_grid(pi, 32, 1.0);
  const auto a = picard_duhamel_solve(catalog::zero(), eigen_data(1.0), grid);
  CHECK(max_error(a.u, [](double t, Point x) { return std::sin(x.x) * std::cos(t); }) < 1e-10);
  DirichletData d{[](double, Point) { return 0.0; }, [](Point) { return 0.0; },
                  [](Point p) { return std::sin(2 * p.x); }};
  const auto b = picard_duhamel_solve(catalog::zero(), d, grid);
  CHECK(max_error(b.u, [](double t, Point x) { return std::sin(2 * x.x) * std::sin(2 * t) / 2; }) <
        1e-10);
  const SpatialGrid disk(Domain::disk(1), {8, 16});
  CHECK_THROWS_AS(picard_duhamel_solve(catalog::zero(), DirichletData::zero(),
                                       SpaceTimeGrid::with_cfl(disk, 0.5)),
                  Error);
}

TEST_CASE("first Picard correction matches brute-force Duhamel quadrature") {
  const double a = 1e-2;
  const auto grid = interval_grid(pi, 32, 1.0);
  const auto r = picard_duhamel_solve(catalog::cubic(), eigen_data(a), grid);
  // (a sin x cos s)^3 = a^3 cos^3 s (3 sin x - sin 3x) / 4; mode k responds with
  // -int_0^t sin(k (t - s)) / k * c_k cos^3 s ds.
  const int M = 20000;
  double sup = 0.0;
  for (int n = 0; n < grid.levels(); ++n) {
    const double t = grid.time(n);
    double w1 = 0, w3 = 0;
    for (int i = 0; i <= M; ++i) {
      const double s = t * i / M, wt = (i == 0 || i == M) ? 0.5 : 1.0;
      const double c3 = std::pow(std::cos(s), 3);
      w1 += wt * std::sin(t - s) * c3;
      w3 += wt * std::sin(3 * (t - s)) / 3 * c3;
    }
    w1 *= -t / M * a * a * a * 0.75;
    w3 *= t / M * a * a * a * 0.25;
    for (std::size_t k = 0; k < grid.space().size(); ++k) {
      const double x = grid.space().node(k).x;
      sup = std::max(sup, std::abs(w1 * std::sin(x) + w3 * std::sin(3 * x)));
    }
  }
  CHECK(r.first_correction_sup == doctest::Approx(sup).epsilon(0.2));
}

TEST_CASE("blow-up is detected near the exact profile time") {
  const double Tp = 1.0, Tstar = 0.8 * Tp;
  DirichletData d{[=](double t, Point) { return 6.0 / ((Tstar - t) * (Tstar - t)); },
                  [=](Point) { return 6.0 / (Tstar * Tstar); },
                  [=](Point) { return 12.0 / (Tstar * Tstar * Tstar); }};
  const auto grid = interval_grid(1.0, 64, Tp);
  try {
    solve_semilinear(catalog::blowup_quadratic(), d, grid);
    FAIL("expected blow-up");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::blowup);
    CHECK(std::abs(e.detail("blowup_time", 0) - Tstar) <= 0.05 * Tstar);
  }
}

TEST_CASE("energy norm examples") {
  const SpatialGrid sq(Domain::rectangle(1, 1), {8, 8});
  {
    const SpaceTimeGrid g(sq, 16, 1.0);
    const WaveField u = WaveField::from_real(g, std::vector<double>(g.levels() * sq.size(), -0.4));
    const auto e = energy_norms(u, 3.0);
    CHECK(e.c_h1 == doctest::Approx(0.4));
    CHECK(e.lp_l2p == doctest::Approx(0.4));
    CHECK(e.c1_l2 == doctest::Approx(0.0));
  }
  {
    const SpaceTimeGrid g(sq, 32, 2.0);
    const WaveField u = WaveField::from_real(g, std::vector<double>(g.levels() * sq.size(), 0.4));
    CHECK(energy_norms(u, 2.0).lp_l2p == doctest::Approx(0.4 * std::sqrt(2.0)));
  }
  {
    const SpatialGrid line(Domain::interval(pi), {400, 0});
    const SpaceTimeGrid g(line, 8, 0.001);
    std::vector<double> v;
    for (int n = 0; n < g.levels(); ++n)
      for (std::size_t k = 0; k < line.size(); ++k) v.push_back(std::sin(line.node(k).x));
    CHECK(energy_norms(WaveField::from_real(g, v), 2.0).c_h1 ==
          doctest::Approx(std::sqrt(pi)).epsilon(1e-4));
  }
}

TEST_CASE("superposition for linear nonlinearities") {
  const auto grid = interval_grid(pi, 32, 1.0);
  const auto F = catalog::linear([](double t, Point x) { return 1 + 0.5 * std::sin(t) * x.x; });
  const auto d1 = eigen_data(1.0);
  DirichletData d2{[](double t, Point) { return std::pow(std::sin(t), 6); },
                   [](Point p) { return std::sin(2 * p.x); }, [](Point) { return 0.0; }};
  const auto a = solve_semilinear(F, d1, grid), b = solve_semilinear(F, d2, grid);
  const auto c = solve_semilinear(F, d1.scaled(2.0).plus(d2, -3.0), grid);
  double e = 0;
  for (std::size_t i = 0; i < c.real_values().size(); ++i)
    e = std::max(e, std::abs(c.real_values()[i] - 2 * a.real_values()[i] + 3 * b.real_values()[i]));
  CHECK(e < 1e-12);
}

TEST_CASE("energy is conserved for the free equation") {
  const SpatialGrid sq(Domain::rectangle(1, 1), {40, 40});
  const auto grid = SpaceTimeGrid::with_cfl(sq, 2.0);
  DirichletData d{[](double, Point) { return 0.0; },
                  [](Point p) { return std::exp(-60 * ((p.x - .5) * (p.x - .5) + (p.y - .4) * (p.y - .4))) *
                                       p.x * (1 - p.x) * p.y * (1 - p.y); },
                  [](Point) { return 0.0; }};
  // The Gaussian bump is compatible only to tolerance; scale keeps it tiny at the edge.
  const auto u = solve_semilinear(catalog::zero(), d, grid);
  std::vector<double> energy;
  std::vector<double> vel(sq.size()), mid(sq.size());
  for (int n = 1; n + 1 < grid.levels(); ++n) {
    const auto a = u.real_level(n - 1), b = u.real_level(n + 1), c = u.real_level(n);
    for (std::size_t k = 0; k < sq.size(); ++k) vel[k] = (b[k] - a[k]) / (2 * grid.dt());
    std::copy(c.begin(), c.end(), mid.begin());
    energy.push_back(sq.l2_norm_sq(vel) + sq.gradient_norm_sq(mid));
  }
  const auto [lo, hi] = std::minmax_element(energy.begin(), energy.end());
  CHECK((*hi - *lo) / *hi <= 0.01);
}

TEST_CASE("existence time shrinks with the data bound") {
  const auto grid = interval_grid(pi, 16, 2.0);
  const auto F = catalog::blowup_quadratic();
  const auto small = estimate_existence_time(F, 0.1, grid);
  const auto large = estimate_existence_time(F, 20.0, grid);
  CHECK(small.T1 == doctest::Approx(2.0));
  CHECK(large.T1 < small.T1);
  CHECK(large.T1 > 0.0);
  CHECK_THROWS_AS(estimate_existence_time(F, 0.0, grid), Error);
}

TEST_CASE("existence time examples") {
  const auto grid = interval_grid(pi, 16, 1.0);
  CHECK(estimate_existence_time(catalog::zero(), 5.0, grid).T1 == doctest::Approx(1.0));
  CHECK(estimate_existence_time(catalog::cubic(), 1e-3, grid).T1 == doctest::Approx(1.0));

  const double Tstar = 0.8;
  ExistenceOptions opt;
  opt.battery.push_back({[=](double t, Point) { return 6.0 / ((Tstar - t) * (Tstar - t)); },
                         [=](Point) { return 6.0 / (Tstar * Tstar); },
                         [=](Point) { return 12.0 / (Tstar * Tstar * Tstar); }});
  opt.norm_cap = 1e6;
  const auto line = interval_grid(1.0, 32, 1.0);
  const auto est = estimate_existence_time(catalog::blowup_quadratic(), 1.0, line, opt);
  CHECK(std::abs(est.T1 - Tstar) <= 0.05 * Tstar);
}

TEST_CASE("existence time is antitone in the data bound") {
  const auto grid = interval_grid(pi, 16, 2.0);
  double prev = 1e300;
  for (double L : {1.0, 5.0, 25.0}) {
    const double T1 = estimate_existence_time(catalog::blowup_quadratic(), L, grid).T1;
    CHECK(T1 <= prev);
    prev = T1;
  }
}
