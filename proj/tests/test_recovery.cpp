#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "wavenl/error.hpp"
#include "wavenl/recovery.hpp"
#include "wavenl/smooth.hpp"

using namespace wavenl;
constexpr double pi = std::numbers::pi;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::config;
}

constexpr double kDelta = 0.03;

// Ladder of probe measurements of q against q = 0.
std::vector<ProbeMeasurement> ladder(const Domain& d, const Potential& q, double t0, int face, double s0,
                                     double ppw, double plateau = 0.0) {
  std::vector<ProbeMeasurement> out;
  for (double rho : default_rho_ladder(kDelta)) {
    ProbeSpec s{t0, face, s0, kDelta, rho, plateau, 0.0, ""};
    ProbeWindow w = make_probe_window(d, s, ppw);
    out.push_back({s, w, probe_trace(w, s, q), probe_trace_free(w, s)});
  }
  return out;
}

double time_profile(double t) { return std::sin(2.0 * pi * t); }

SpaceTimeGrid interval_grid(double T, int nx = 64) {
  return SpaceTimeGrid::with_cfl(SpatialGrid(Domain::interval(pi), {nx, 0}), T);
}

double alpha(double t, Point x) { return 1.0 + 0.5 * std::sin(pi * t) * std::cos(x.x); }

RecoveryConfig lateral_config() {
  RecoveryConfig c;
  c.lambda_grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
  c.delta = kDelta;
  c.rho_ladder = default_rho_ladder(kDelta);
  c.probe_points = {{0.6, 0, 0.0}, {1.0, 1, 0.0}, {1.4, 0, 0.0}};
  return c;
}

}  // namespace

TEST_CASE("identical potentials give a zero estimate") {
  const Domain d = Domain::interval(pi);
  const auto g = interval_grid(1.0);
  const Potential q = Potential::constant(g, 0.5);
  std::vector<ProbeMeasurement> L = ladder(d, q, 0.5, 0, 0.0, 30.0);
  for (auto& r : L) r.trace2 = r.trace1;
  const PointEstimate e = recover_q_difference_point(L);
  CHECK(std::abs(e.estimate) == 0.0);
}

TEST_CASE("constant potential on the interval") {
  const Domain d = Domain::interval(pi);
  const auto g = interval_grid(1.0);
  const PointEstimate e = recover_q_difference_point(ladder(d, Potential::constant(g, 0.5), 0.5, 0, 0.0, 30.0));
  CHECK(std::abs(e.value - 0.5) <= 0.05);
  CHECK(e.imag_ratio <= 0.2);
  CHECK_FALSE(e.reliability_warning);
  CHECK(e.rho.size() == 3);
  CHECK(e.x0.x == 0.0);
}

TEST_CASE("time-dependent bump potential on the interval at three points") {
  const Domain d = Domain::interval(pi);
  const auto g = interval_grid(2.0);
  auto qf = [](double t, Point x) { return time_profile(t) * std::exp(1.0) * bump((x.x - 1.0) / 1.5); };
  const Potential q = Potential::sample(g, qf);
  for (double t0 : {0.6, 0.8, 1.3}) {
    const PointEstimate e = recover_q_difference_point(ladder(d, q, t0, 0, 0.0, 30.0));
    const double truth = qf(t0, {0.0, 0.0});
    CAPTURE(t0);
    CHECK(std::abs(e.value - truth) <= 0.1 * std::abs(truth));
    CHECK(e.imag_ratio <= 0.2);
  }
}

TEST_CASE("bump potential on the rectangle at three boundary points") {
  const Domain d = Domain::rectangle(pi, pi);
  const auto g = SpaceTimeGrid::with_cfl(SpatialGrid(d, {32, 32}), 1.0);
  auto qf = [](double t, Point x) {
    return time_profile(t) * std::exp(1.0) * bump(std::hypot(x.x - 1.5, x.y) / 1.2);
  };
  const Potential q = Potential::sample(g, qf);
  for (double s0 : {1.0, 1.5, 2.0}) {
    const PointEstimate e = recover_q_difference_point(ladder(d, q, 0.3, 0, s0, 20.0, 0.5 * kDelta));
    const double truth = qf(0.3, {s0, 0.0});
    CAPTURE(s0);
    CHECK(std::abs(e.value - truth) <= 0.1 * std::abs(truth));
    CHECK(e.imag_ratio <= 0.2);
  }
}

TEST_CASE("probe windows") {
  const Domain rect = Domain::rectangle(pi, 2.0);
  ProbeSpec s{0.5, 1, 1.0, kDelta, 20.0 / kDelta, 0.0, 0.0, ""};
  const ProbeWindow w = make_probe_window(rect, s, 20.0);
  // Local face 0 sits on the probe face, with x = 0 at global s_lo.
  const Point p = w.to_global({1.0 - w.s_lo, 0.0});
  CHECK(p.x == doctest::Approx(pi));
  CHECK(p.y == doctest::Approx(1.0));
  CHECK(w.t_start == doctest::Approx(0.5 - 2.0 * kDelta));
  CHECK(w.global_time(w.grid.steps()) >= 0.5 + 0.25 * kDelta - 1e-12);
  CHECK(kind_of([&] { make_probe_window(Domain::disk(1.0), s, 20.0); }) == ErrorKind::config);
  CHECK(kind_of([&] { make_probe_window(rect, s, 4.0); }) == ErrorKind::config);
}

TEST_CASE("assemble_F on polynomial integrands") {
  const std::vector<double> lam = {-1.0, -0.5, 0.0, 0.5, 1.0};
  // Zero samples return the anchor.
  auto F0 = assemble_F({std::vector<double>(5, 0.0)}, lam, {0.7});
  for (double v : F0[0]) CHECK(v == 0.7);
  // Constant and linear integrands are exact.
  auto Fm = assemble_F({std::vector<double>(5, 1.3)}, lam, {0.0});
  for (std::size_t l = 0; l < lam.size(); ++l) CHECK(Fm[0][l] == doctest::Approx(1.3 * lam[l]).epsilon(1e-14));
  std::vector<double> lin;
  for (double x : lam) lin.push_back(2.0 * 0.8 * x);
  auto Fq = assemble_F({lin}, lam, {0.0});
  for (std::size_t l = 0; l < lam.size(); ++l) CHECK(Fq[0][l] == doctest::Approx(0.8 * lam[l] * lam[l]).epsilon(1e-14));
  // Quadratic integrand: error O(dlambda^2).
  double err_prev = 0.0;
  for (int n : {4, 8, 16}) {
    std::vector<double> g, s;
    for (int k = -n; k <= n; ++k) {
      g.push_back(static_cast<double>(k) / n);
      s.push_back(3.0 * g.back() * g.back());
    }
    const auto F = assemble_F({s}, g, {0.0});
    const double err = std::abs(F[0].back() - 1.0);
    if (err_prev > 0.0) CHECK(std::log2(err_prev / err) == doctest::Approx(2.0).epsilon(0.05));
    err_prev = err;
  }
}

TEST_CASE("assemble_F errors") {
  const std::vector<double> lam = {-1.0, 0.0, 1.0};
  CHECK(kind_of([&] { assemble_F({{1.0, 1.0, 1.0}}, {-1.0, 0.5, 1.0}, {0.0}); }) == ErrorKind::gap);
  CHECK(kind_of([&] { assemble_F({{1.0, 1.0}}, lam, {0.0}); }) == ErrorKind::gap);
  CHECK(kind_of([&] {
          assemble_F({{1.0, std::numeric_limits<double>::quiet_NaN(), 1.0}}, lam, {0.0});
        }) == ErrorKind::gap);
  CHECK(kind_of([&] { assemble_F({{1.0, 1.0, 1.0}}, lam, {}); }) == ErrorKind::shape);
}

TEST_CASE("t = 0 identity for a cubic") {
  const auto g = SpaceTimeGrid::with_cfl(SpatialGrid(Domain::rectangle(1.0, 1.0), {16, 16}), 0.25);
  const std::size_t N = g.space().size();
  const std::vector<double> lam = {-0.5, -0.25, 0.0, 0.25, 0.5};
  const InitialRecovery r = recover_F_initial_interior(catalog::cubic(), lam, g, std::vector<double>(N, 0.0));
  CHECK_FALSE(r.oracle_mode);
  for (std::size_t l = 0; l < lam.size(); ++l)
    for (std::size_t k = 0; k < N; ++k) {
      const double want = 3.0 * lam[l] * lam[l];
      CHECK(std::abs(r.duF[l][k] - want) <= 1e-12 * std::max(want, 1e-300));
    }
  // Assembled F approaches lambda^3 at second order.
  std::vector<double> errs;
  for (int n : {4, 8, 16}) {
    std::vector<double> grid;
    for (int k = -n; k <= n; ++k) grid.push_back(0.5 * k / n);
    const auto s = SpaceTimeGrid::with_cfl(SpatialGrid(Domain::interval(1.0), {8, 0}), 0.1);
    const auto rr = recover_F_initial_interior(catalog::cubic(), grid, s, std::vector<double>(s.space().size(), 0.0));
    errs.push_back(std::abs(rr.F.back()[3] - 0.125));
  }
  CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
  CHECK(std::log2(errs[1] / errs[2]) >= 1.9);
}

TEST_CASE("t = 0 identity: zero and linear nonlinearities, oracle") {
  const auto g = SpaceTimeGrid::with_cfl(SpatialGrid(Domain::interval(1.0), {16, 0}), 0.2);
  const std::size_t N = g.space().size();
  const std::vector<double> lam = {-1.0, 0.0, 1.0};
  const auto z = recover_F_initial_interior(catalog::zero(), lam, g, std::vector<double>(N, 0.0));
  for (const auto& row : z.F)
    for (double v : row) CHECK(v == 0.0);
  auto m = [](double t, Point x) { return 1.0 + t + x.x; };
  int calls = 0;
  const auto r = recover_F_initial_interior(catalog::linear(m), lam, g, std::vector<double>(N, 0.0),
                                            [&](double) { ++calls; return Potential::constant(g, 0.0); });
  CHECK(r.oracle_mode);
  CHECK(calls == 3);
  CHECK(r.interior.size() == 3);
  for (std::size_t l = 0; l < lam.size(); ++l)
    for (std::size_t k = 0; k < N; ++k)
      CHECK(r.F[l][k] == doctest::Approx(m(0.0, g.space().node(k)) * lam[l]).epsilon(1e-13));
}

TEST_CASE("t = 0 identity: blow-up is a range error") {
  const auto g = SpaceTimeGrid::with_cfl(SpatialGrid(Domain::interval(1.0), {16, 0}), 2.0);
  CHECK(kind_of([&] {
          recover_F_initial_interior(catalog::blowup_quadratic(), {-50.0, 0.0, 50.0}, g,
                                     std::vector<double>(g.space().size(), 0.0));
        }) == ErrorKind::range);
}

TEST_CASE("lateral recovery: zero nonlinearity") {
  const auto src = simulate_measurements(catalog::zero(), interval_grid(2.0), {});
  const auto R = recover_duF_lateral(*src, lateral_config(), Domain::interval(pi), 2.0);
  for (const auto& row : R.estimates)
    for (const auto& e : row) CHECK(e.value == 0.0);
}

TEST_CASE("lateral recovery: linear nonlinearity is independent of lambda") {
  auto m = [](double t, Point x) { return 0.5 + 0.25 * std::cos(pi * t) * std::cos(x.x); };
  const auto src = simulate_measurements(catalog::linear(m), interval_grid(2.0, 128), {});
  const auto R = recover_duF_lateral(*src, lateral_config(), Domain::interval(pi), 2.0);
  for (std::size_t i = 0; i < R.points.size(); ++i) {
    const double truth = m(R.points[i].t0, R.positions[i]);
    for (std::size_t l = 0; l < R.lambdas.size(); ++l) {
      CHECK(R.value(i, l) == R.value(i, 0));
      CHECK(std::abs(R.value(i, l) - truth) <= 0.02 * truth);
    }
  }
}

TEST_CASE("lateral recovery: quadratic nonlinearity") {
  const auto src = simulate_measurements(catalog::quadratic(alpha), interval_grid(2.0, 128), {});
  const auto R = recover_duF_lateral(*src, lateral_config(), Domain::interval(pi), 2.0);
  std::vector<std::vector<double>> S(R.points.size());
  for (std::size_t i = 0; i < R.points.size(); ++i) {
    // Least-squares slope in lambda.
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t l = 0; l < R.lambdas.size(); ++l) {
      sxy += R.lambdas[l] * R.value(i, l);
      sxx += R.lambdas[l] * R.lambdas[l];
      S[i].push_back(R.value(i, l));
    }
    const double a = alpha(R.points[i].t0, R.positions[i]);
    CHECK(std::abs(sxy / sxx - 2.0 * a) <= 0.15 * 2.0 * a);
  }
  const auto F = assemble_F(S, R.lambdas, std::vector<double>(S.size(), 0.0));
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < R.points.size(); ++i)
    for (std::size_t l = 0; l < R.lambdas.size(); ++l) {
      const double truth = alpha(R.points[i].t0, R.positions[i]) * R.lambdas[l] * R.lambdas[l];
      err = std::max(err, std::abs(F[i][l] - truth));
      scale = std::max(scale, std::abs(truth));
    }
  CHECK(err / scale <= 0.15);
}

TEST_CASE("recovery config validation") {
  const Domain d = Domain::interval(pi);
  RecoveryConfig c = lateral_config();
  CHECK_NOTHROW(c.validate(d, 2.0));
  auto bad = [&](auto edit) {
    RecoveryConfig x = lateral_config();
    edit(x);
    return kind_of([&] { x.validate(d, 2.0); });
  };
  CHECK(bad([](RecoveryConfig& x) { x.lambda_grid = {-1.0, 1.0}; }) == ErrorKind::config);
  CHECK(bad([](RecoveryConfig& x) { x.lambda_grid = {-1.0, 0.0, 0.5}; }) == ErrorKind::config);
  CHECK(bad([](RecoveryConfig& x) { x.rho_ladder.clear(); }) == ErrorKind::config);
  CHECK(bad([](RecoveryConfig& x) { x.probe_points.clear(); }) == ErrorKind::config);
  CHECK(bad([](RecoveryConfig& x) { x.probe_points = {{0.01, 0, 0.0}}; }) == ErrorKind::config);
}

TEST_CASE("simulated source: determinism and noise") {
  const auto g = interval_grid(2.0);
  const Domain d = Domain::interval(pi);
  ProbeSpec s{1.0, 0, 0.0, kDelta, 10.0 / kDelta, 0.0, 0.0, ""};
  const ProbeWindow w = make_probe_window(d, s, 30.0);
  SimulationOptions noisy;
  noisy.noise_level = 0.05;
  noisy.seed = 7;
  const auto a = simulate_measurements(catalog::quadratic(alpha), g, noisy);
  const auto b = simulate_measurements(catalog::quadratic(alpha), g, noisy);
  const auto clean = simulate_measurements(catalog::quadratic(alpha), g, {});
  CHECK(a->kind() == SourceKind::simulated_black_box);
  const BoundaryTrace t1 = a->apply_probe(0.5, w, s);
  CHECK(t1.values == a->apply_probe(0.5, w, s).values);
  CHECK(t1.values == b->apply_probe(0.5, w, s).values);
  CHECK(t1.values != clean->apply_probe(0.5, w, s).values);
  CHECK(clean->apply_probe(0.5, w, s).values == clean->apply_probe(0.5, w, s).values);
  noisy.seed = 8;
  CHECK(simulate_measurements(catalog::quadratic(alpha), g, noisy)->apply_probe(0.5, w, s).values != t1.values);
  // Linear F: the background does not matter.
  const auto lin = simulate_measurements(catalog::linear([](double, Point) { return 0.3; }), g, {});
  CHECK(lin->apply_probe(-1.0, w, s).values == lin->apply_probe(1.0, w, s).values);
}

TEST_CASE("simulated source: range errors") {
  const auto g = interval_grid(1.0);
  const Domain d = Domain::interval(pi);
  ProbeSpec s{0.5, 0, 0.0, kDelta, 10.0 / kDelta, 0.0, 0.0, ""};
  const ProbeWindow w = make_probe_window(d, s, 30.0);
  SimulationOptions o;
  o.admissible = {1.0};
  const auto src = simulate_measurements(catalog::quadratic(alpha), g, o);
  CHECK_NOTHROW(src->apply_probe(1.0, w, s));
  CHECK(kind_of([&] { src->apply_probe(1.5, w, s); }) == ErrorKind::range);
  SimulationOptions c;
  c.background = Background::constant;
  const auto blow = simulate_measurements(catalog::blowup_quadratic(), g, c);
  CHECK(kind_of([&] { blow->apply_probe(50.0, w, s); }) == ErrorKind::range);
}

TEST_CASE("partial-data source restrictions") {
  const Domain d = Domain::interval(pi);
  const auto g = interval_grid(1.0, 32);
  SimulationOptions o;
  o.background = Background::constant;
  o.partial = PartialDataFaces{{1.0, 0.0}, 0.0};
  const auto src = simulate_measurements(catalog::cubic(), g, o);
  const BoundaryPortion all{"all", -1, 0.0, 0.0};
  // U is the face x = pi (outward normal +1), V the face x = 0.
  CHECK(o.partial->in_U(d, 1, 0.0));
  CHECK_FALSE(o.partial->in_U(d, 0, 0.0));
  LinearData on_U;
  on_U.h = [](double t, Point x) { return x.x > 1.0 ? Complex(std::sin(t) * std::sin(t), 0.0) : Complex(0.0, 0.0); };
  const MeasurementResult r = src->apply(0.2, on_U, all);
  REQUIRE(r.trace.nodes.size() == 1);
  CHECK(r.trace.nodes[0].face == 0);
  CHECK(r.final_state.has_value());
  LinearData with_h0 = on_U;
  with_h0.h0 = [](Point x) { return Complex(std::sin(x.x), 0.0); };
  CHECK(kind_of([&] { src->apply(0.2, with_h0, all); }) == ErrorKind::config);
  LinearData off_U;
  off_U.h = [](double t, Point) { return Complex(t * t, 0.0); };
  CHECK(kind_of([&] { src->apply(0.2, off_U, all); }) == ErrorKind::config);
  ProbeSpec s{0.5, 0, 0.0, kDelta, 10.0 / kDelta, 0.0, 0.0, ""};
  CHECK(kind_of([&] { src->apply_probe(0.2, make_probe_window(d, s, 30.0), s); }) == ErrorKind::config);
  SimulationOptions lateral_partial;
  lateral_partial.partial = o.partial;
  CHECK(kind_of([&] { simulate_measurements(catalog::cubic(), g, lateral_partial); }) == ErrorKind::config);
}

TEST_CASE("injected source replays recorded traces") {
  const Domain d = Domain::interval(pi);
  const auto g = interval_grid(2.0, 128);
  const auto sim = simulate_measurements(catalog::quadratic(alpha), g, {});
  RecoveryConfig c = lateral_config();
  c.lambda_grid = {-1.0, 0.0, 1.0};
  c.probe_points = {{1.0, 0, 0.0}};
  InjectedSource inj;
  for (double lam : c.lambda_grid)
    for (double rho : c.rho_ladder) {
      ProbeSpec s{1.0, 0, 0.0, kDelta, rho, 0.0, 0.0, ""};
      inj.insert(lam, s, sim->apply_probe(lam, make_probe_window(d, s, c.points_per_wavelength), s));
    }
  const auto A = recover_duF_lateral(*sim, c, d, 2.0);
  const auto B = recover_duF_lateral(inj, c, d, 2.0);
  for (std::size_t l = 0; l < 3; ++l) CHECK(A.value(0, l) == B.value(0, l));
  CHECK(inj.kind() == SourceKind::injected_traces);
  c.lambda_grid = {-2.0, 0.0, 2.0};
  CHECK(kind_of([&] { recover_duF_lateral(inj, c, d, 2.0); }) == ErrorKind::gap);
  CHECK(kind_of([&] { inj.apply(0.0, LinearData{}, {"all", -1, 0.0, 0.0}); }) == ErrorKind::config);
}

TEST_CASE("parallel lateral recovery matches the serial run") {
  const auto src = simulate_measurements(catalog::quadratic(alpha), interval_grid(2.0, 64), {});
  RecoveryConfig c = lateral_config();
  const auto A = recover_duF_lateral(*src, c, Domain::interval(pi), 2.0);
  c.threads = 3;
  const auto B = recover_duF_lateral(*src, c, Domain::interval(pi), 2.0);
  for (std::size_t i = 0; i < A.points.size(); ++i)
    for (std::size_t l = 0; l < A.lambdas.size(); ++l) CHECK(A.value(i, l) == B.value(i, l));
}
