// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "wavenl/error.hpp"
#include "wavenl/forward.hpp"
#include "wavenl/linearization.hpp"
#include "wavenl/probe.hpp"
#include "wavenl/recovery.hpp"
#include "wavenl/smooth.hpp"

using namespace wavenl;
constexpr double pi = std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

SpaceTimeGrid interval_grid(double L, int nx, double T) {
  return SpaceTimeGrid::with_cfl(SpatialGrid(Domain::interval(L), {nx, 0}), T);
}

DirichletData sine_initial(double a) {
  return {[](double, Point) { return 0.0; }, [a](Point p) { return a * std::sin(p.x); }, [](Point) { return 0.0; }};
}

// ------------------------------------------------------------------ 1
Outcome forward_convergence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Nonlinearity F;
  F.name = "manufactured";
  F.eval = [](double t, Point x, double u) {
    const double s = std::sin(x.x) * std::cos(t);
    return u * u * u - s * s * s;
  };
  F.du = [](double, Point, double u) { return 3.0 * u * u; };
  F.growth_b = 3.0;
  std::vector<double> errs;
  for (int nx : {20, 40, 80}) {
    const auto g = interval_grid(pi, nx, 1.0);
    const WaveField u = solve_semilinear(F, sine_initial(1.0), g);
    double e = 0.0;
    for (int n = 0; n < g.levels(); ++n)
      for (std::size_t k = 0; k < g.space().size(); ++k)
        e = std::max(e, std::abs(u.real_at(n, k) - std::sin(g.space().node(k).x) * std::cos(g.time(n))));
    errs.push_back(e);
  }
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    const double r = errs[i] / errs[i + 1];
    o.require(r >= 3.5 && r <= 4.5, "ratio " + fmt("%.3f", r));
  }
  const double s = seconds_since(t0);
  o.require(s < 10.0, "runtime " + fmt("%.2fs", s));
  return o;
}

// ------------------------------------------------------------------ 2
Outcome oracle_equivalence() {
  Outcome o;
  const auto g = interval_grid(pi, 64, 1.0);
  const auto data = sine_initial(1e-2);
  const WaveField fd = solve_semilinear(catalog::cubic(), data, g);
  const PicardResult sp = picard_duhamel_solve(catalog::cubic(), data, g);
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < fd.real_values().size(); ++i) {
    diff = std::max(diff, std::abs(fd.real_values()[i] - sp.u.real_values()[i]));
    ref = std::max(ref, std::abs(sp.u.real_values()[i]));
  }
  o.require(diff / ref <= 1e-3, "relative sup discrepancy " + fmt("%.2e", diff / ref));
  return o;
}

// ------------------------------------------------------------------ 3
Outcome blowup_detection() {
  Outcome o;
  const double Tp = 1.0, Ts = 0.8 * Tp;
  DirichletData d{[=](double t, Point) { return 6.0 / ((Ts - t) * (Ts - t)); },
                  [=](Point) { return 6.0 / (Ts * Ts); }, [=](Point) { return 12.0 / (Ts * Ts * Ts); }};
  try {
    solve_semilinear(catalog::blowup_quadratic(), d, interval_grid(1.0, 64, Tp));
    o.require(false, "no blow-up reported");
  } catch (const Error& e) {
    o.require(e.kind() == ErrorKind::blowup, std::string("kind ") + to_string(e.kind()));
    const double t = e.detail("blowup_time", 0.0);
    o.require(std::abs(t - Ts) <= 0.05 * Ts, "blow-up time " + fmt("%.4f", t) + " vs " + fmt("%.2f", Ts));
  }
  return o;
}

// ------------------------------------------------------------------ 4
Outcome frechet_remainder() {
  Outcome o;
  const auto g = interval_grid(pi, 48, 2.0);
  const BoundaryPortion left{"left", 0, 0.0, 0.0};
  const DirichletData H{[](double t, Point p) { return p.x < 1e-12 ? bump((t - 0.7) / 0.5) : 0.0; },
                        [](Point) { return 0.0; }, [](Point) { return 0.0; }};
  struct Case {
    const char* name;
    Nonlinearity F;
    DirichletData G;
    std::vector<double> scales;
  };
  const Case cases[] = {
      {"u^2", catalog::quadratic([](double, Point) { return 1.0; }), DirichletData::zero(), {0.4, 0.2, 0.1, 0.05}},
      {"u^3", catalog::cubic(), sine_initial(0.5), {0.1, 0.05, 0.025, 0.0125}},
  };
  for (const Case& c : cases) {
    const RemainderReport r = frechet_remainder_check(c.F, c.G, H, g, left, c.scales, 2);
    o.require(!r.degenerate, std::string(c.name) + " not degenerate");
    for (std::size_t i = 0; i + 1 < r.remainders.size(); ++i) {
      const double q = r.remainders[i] / r.remainders[i + 1];
      o.require(q >= 3.0 && q <= 5.0, std::string(c.name) + " ratio " + fmt("%.3f", q));
    }
    o.require(r.identity_slope >= 0.8 && r.identity_slope <= 1.2,
              std::string(c.name) + " identity slope " + fmt("%.3f", r.identity_slope));
  }
  return o;
}

// ------------------------------------------------------------------ 5
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = std::log(x[k]), b = std::log(y[k]);
    sx += a, sy += b, sxx += a * a, sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome mollifier_scaling() {
  Outcome o;
  const std::vector<double> rhos{10.0, 20.0, 40.0, 80.0};
  // H^2 convergence for a smooth potential.
  {
    const auto g = interval_grid(1.0, 128, 1.0);
    const Potential q =
        Potential::sample(g, [](double t, Point x) { return std::sin(2 * pi * t) * std::cos(3 * x.x) + 0.3; });
    double prev = INFINITY;
    bool dec = true;
    std::string vals;
    for (double rho : rhos) {
      const Potential m = mollify_potential(q, rho);
      std::vector<double> diff(q.values().size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = m.values()[i] - q.values()[i];
      const double e = Potential(g, diff).h2_norm();
      dec = dec && e < prev;
      prev = e;
      vals += (vals.empty() ? "" : ",") + fmt("%.3g", e);
    }
    o.require(dec, "H2 error decreasing (" + vals + ")");
  }
  // Norm growth for a potential just outside H^2 (space-time cusp), n = 2.
  {
    const Domain d = Domain::rectangle(2.0, 2.0);
    const SpaceTimeGrid g(SpatialGrid(d, {64, 64}), 128, 2.0);
    const Potential q = Potential::sample(g, [](double t, Point x) {
      return std::pow((t - 1) * (t - 1) + (x.x - 1) * (x.x - 1) + (x.y - 1) * (x.y - 1), 0.25);
    });
    std::vector<double> n3, n4;
    for (double rho : rhos) {
      const Potential m = mollify_potential(q, rho);
      n3.push_back(m.hl_norm(3));
      n4.push_back(m.hl_norm(4));
    }
    const double s3 = slope(rhos, n3), s4 = slope(rhos, n4);
    o.require(std::abs(s3 - 0.25) <= 0.2 * 0.25, "H3 slope " + fmt("%.3f", s3) + " vs 0.25");
    o.require(std::abs(s4 - 0.5) <= 0.2 * 0.5, "H4 slope " + fmt("%.3f", s4) + " vs 0.5");
  }
  return o;
}

// ------------------------------------------------------------------ 6
Outcome go_certification() {
  Outcome o;
  // Boundary vanishing of a1, a2 on a rectangle face with variable q.
  {
    const Domain d = Domain::rectangle(1.0, 1.0);
    const auto g = SpaceTimeGrid::with_cfl(SpatialGrid(d, {16, 16}), 1.0);
    const Potential q = Potential::sample(g, [](double t, Point x) { return std::cos(t + x.x) * (1.0 + x.y); });
    ProbeSpec s{0.5, 2, 0.4, 0.02, 40.0, 0.0, 0.0, ""};
    const GoProbe p = build_go_probe(d, q, s);
    const double scale = p.boundary_max(0);
    o.require(p.boundary_max(1) <= 1e-12 * scale, "a1 on boundary " + fmt("%.1e", p.boundary_max(1)));
    o.require(p.boundary_max(2) <= 1e-12 * scale, "a2 on boundary " + fmt("%.1e", p.boundary_max(2)));
  }
  // Residual, remainder and a2 growth along the ladder.
  {
    const Domain d = Domain::interval(1.0);
    const auto g = interval_grid(1.0, 1024, 1.0);
    const Potential q =
        Potential::sample(g, [](double t, Point x) { return std::sin(2 * pi * t) * std::cos(3 * x.x) + 0.3; });
    const std::vector<double> ladder{20.0, 40.0, 80.0};
    std::vector<double> res, rem, h2;
    for (double rho : ladder) {
      ProbeSpec s{0.5, 0, 0.0, 0.02, rho, 0.0, 0.0, ""};
      const GoProbe p = build_go_probe(d, q, s);
      res.push_back(ansatz_residual(p, q).scaled);
      rem.push_back(solve_remainder(p, q, g).scaled_trace);
      h2.push_back(p.a2_h2_norm());
    }
    bool dres = true, drem = true;
    for (std::size_t k = 1; k < ladder.size(); ++k) {
      dres = dres && res[k] < res[k - 1];
      drem = drem && rem[k] < rem[k - 1];
    }
    o.require(dres, "rho*residual decreasing " + fmt("%.3g", res.front()) + "->" + fmt("%.3g", res.back()));
    o.require(drem, "rho*remainder trace decreasing " + fmt("%.3g", rem.front()) + "->" + fmt("%.3g", rem.back()));
    const double sl = std::log(h2.back() / h2.front()) / std::log(ladder.back() / ladder.front());
    o.require(sl <= 1.0 / 3.0 + 0.1, "a2 H2 slope " + fmt("%.3f", sl));
  }
  // Constant difference from the first-order inward derivatives.
  {
    const double c = 0.7;
    const auto g = interval_grid(1.0, 64, 1.0);
    ProbeSpec s{0.5, 0, 0.0, 0.02, 40.0, 0.0, 0.0, ""};
    const auto [p1, p2] =
        build_probe(Domain::interval(1.0), Potential::constant(g, c), Potential::constant(g, 0.0), s);
    const Complex dd = p1.inward_derivative(1, 0.5, 0.0) - p2.inward_derivative(1, 0.5, 0.0);
    const double e1 = std::abs(dd - Complex(0.0, 0.5 * c)) / (0.5 * c);
    const Domain r = Domain::rectangle(1.0, 1.0);
    const auto rg = SpaceTimeGrid::with_cfl(SpatialGrid(r, {16, 16}), 1.0);
    ProbeSpec rs{0.5, 1, 0.5, 0.02, 40.0, 0.0, 0.0, ""};
    const auto [r1, r2] = build_probe(r, Potential::constant(rg, c), Potential::constant(rg, 0.0), rs);
    const Complex rd = r1.inward_derivative(1, 0.5, 0.5) - r2.inward_derivative(1, 0.5, 0.5);
    const double e2 = std::abs(rd - Complex(0.0, 0.5 * c)) / (0.5 * c);
    o.require(e1 <= 0.02 && e2 <= 0.02, "constant difference error " + fmt("%.1e", std::max(e1, e2)));
  }
  return o;
}

// ------------------------------------------------------------------ 7
constexpr double kDelta = 0.03;

struct BoundaryCase {
  const char* name;
  Domain domain;
  SpaceTimeGrid grid;
  SpaceTimeFn q;
  std::vector<ProbePoint> points;
  double ppw;
  double plateau;
};

void check_boundary_case(Outcome& o, const BoundaryCase& c) {
  const Potential q = Potential::sample(c.grid, c.q);
  double worst = 0.0, worst_imag = 0.0, control = 0.0, scale = 0.0;
  for (const ProbePoint& p : c.points) {
    std::vector<ProbeMeasurement> ladder;
    for (double rho : default_rho_ladder(kDelta)) {
      ProbeSpec s{p.t0, p.face, p.s0, kDelta, rho, c.plateau, 0.0, ""};
      validate_probe(c.domain, s, c.grid.T());
      ProbeWindow w = make_probe_window(c.domain, s, c.ppw);
      ladder.push_back({s, w, probe_trace(w, s, q), probe_trace_free(w, s)});
    }
    const PointEstimate e = recover_q_difference_point(ladder);
    const double truth = c.q(p.t0, c.domain.boundary_point(p.face, p.s0));
    worst = std::max(worst, std::abs(e.value - truth) / std::abs(truth));
    worst_imag = std::max(worst_imag, e.imag_ratio);
    scale = std::max(scale, std::abs(truth));
    for (auto& m : ladder) m.trace2 = m.trace1;
    control = std::max(control, std::abs(recover_q_difference_point(ladder).estimate));
  }
  o.require(worst <= 0.1, std::string(c.name) + " max rel err " + fmt("%.2e", worst));
  o.require(worst_imag <= 0.2, std::string(c.name) + " imag " + fmt("%.1e", worst_imag));
  o.require(control <= 1e-3 * scale, std::string(c.name) + " control " + fmt("%.1e", control));
}

Outcome boundary_recovery() {
  Outcome o;
  const Domain I = Domain::interval(pi);
  const Domain R = Domain::rectangle(pi, pi);
  auto tbump1 = [](double t, Point x) { return std::sin(2 * pi * t) * std::exp(1.0) * bump((x.x - 1.0) / 1.5); };
  auto tbump2 = [](double t, Point x) {
    return std::sin(2 * pi * t) * std::exp(1.0) * bump(std::hypot(x.x - 1.5, x.y) / 1.2);
  };
  auto half = [](double, Point) { return 0.5; };
  const auto Ig = interval_grid(pi, 64, 2.0);
  const auto Rg = SpaceTimeGrid::with_cfl(SpatialGrid(R, {32, 32}), 1.2);
  const std::vector<BoundaryCase> cases{
      {"interval const", I, Ig, half, {{0.5, 0, 0.0}, {1.0, 1, 0.0}, {1.5, 0, 0.0}}, 30.0, 0.0},
      {"interval sin*bump", I, Ig, tbump1, {{0.6, 0, 0.0}, {0.8, 0, 0.0}, {1.3, 0, 0.0}}, 30.0, 0.0},
      {"rectangle const", R, Rg, half, {{0.6, 0, 1.0}, {0.6, 1, 1.5}, {0.7, 2, 2.0}}, 20.0, 0.5 * kDelta},
      {"rectangle sin*bump", R, Rg, tbump2, {{0.6, 0, 1.0}, {0.7, 0, 1.5}, {0.6, 0, 2.0}}, 20.0, 0.5 * kDelta},
  };
  for (const auto& c : cases) check_boundary_case(o, c);
  return o;
}

// ------------------------------------------------------------------ 8
Outcome nonlinearity_recovery() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto alpha = [](double t, Point x) { return 1.0 + 0.5 * std::sin(pi * t) * std::cos(x.x); };
  const double T = 2.0;
  const Domain d = Domain::interval(pi);
  const auto src = simulate_measurements(catalog::quadratic(alpha), interval_grid(pi, 128, T), {});
  RecoveryConfig c;
  c.lambda_grid = {-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0};
  c.delta = kDelta;
  c.rho_ladder = default_rho_ladder(kDelta);
  for (double t : {0.5, 0.75, 1.0, 1.25, 1.5})
    for (int face : {0, 1}) c.probe_points.push_back({t, face, 0.0});
  const LateralRecovery Rr = recover_duF_lateral(*src, c, d, T);
  std::vector<std::vector<double>> S(Rr.points.size());
  for (std::size_t i = 0; i < Rr.points.size(); ++i)
    for (std::size_t l = 0; l < Rr.lambdas.size(); ++l) S[i].push_back(Rr.value(i, l));
  const auto F = assemble_F(S, Rr.lambdas, std::vector<double>(S.size(), 0.0));
  double err = 0.0, scale = 0.0, worst_slope = 0.0;
  for (std::size_t i = 0; i < Rr.points.size(); ++i) {
    const double a = alpha(Rr.points[i].t0, Rr.positions[i]);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t l = 0; l < Rr.lambdas.size(); ++l) {
      const double lam = Rr.lambdas[l];
      err = std::max(err, std::abs(F[i][l] - a * lam * lam));
      scale = std::max(scale, a * lam * lam);
      sxy += lam * S[i][l];
      sxx += lam * lam;
    }
    worst_slope = std::max(worst_slope, std::abs(sxy / sxx - 2.0 * a) / (2.0 * a));
  }
  o.require(err / scale <= 0.15, "sup rel err " + fmt("%.2e", err / scale));
  o.require(worst_slope <= 0.15, "worst slope err " + fmt("%.2e", worst_slope));
  const double s = seconds_since(t0);
  o.require(s < 300.0, "runtime " + fmt("%.1fs", s));
  return o;
}

// ------------------------------------------------------------------ 9
Outcome initial_identity() {
  Outcome o;
  const auto g = SpaceTimeGrid::with_cfl(SpatialGrid(Domain::rectangle(1.0, 1.0), {16, 16}), 0.25);
  const std::vector<double> lam{-0.5, -0.25, 0.0, 0.25, 0.5};
  const auto r = recover_F_initial_interior(catalog::cubic(), lam, g, std::vector<double>(g.space().size(), 0.0));
  double worst = 0.0;
  for (std::size_t l = 0; l < lam.size(); ++l)
    for (double v : r.duF[l]) {
      const double want = 3.0 * lam[l] * lam[l];
      worst = std::max(worst, want == 0.0 ? std::abs(v) : std::abs(v - want) / want);
    }
  o.require(worst <= 1e-12, "duF rel err " + fmt("%.1e", worst));
  const auto s = interval_grid(1.0, 8, 0.1);
  std::vector<double> errs;
  for (int n : {4, 8, 16, 32}) {
    std::vector<double> grid;
    for (int k = -n; k <= n; ++k) grid.push_back(0.5 * k / n);
    const auto rr = recover_F_initial_interior(catalog::cubic(), grid, s, std::vector<double>(s.space().size(), 0.0));
    double e = 0.0;
    for (std::size_t l = 0; l < grid.size(); ++l)
      for (double v : rr.F[l]) e = std::max(e, std::abs(v - std::pow(grid[l], 3)));
    errs.push_back(e);
  }
  const double order = std::log2(errs[errs.size() - 2] / errs.back());
  o.require(order >= 1.9, "quadrature order " + fmt("%.3f", order));
  return o;
}

// ------------------------------------------------------------------ 10
Outcome determinism_and_restrictions() {
  Outcome o;
  using namespace wavenl::cli;
  json raw = {{"schema_version", kSchemaVersion},
              {"pipeline", "recover_nonlinearity"},
              {"domain", {{"kind", "interval"}, {"length", pi}}},
              {"grid", {{"cells", {128}}, {"T", 2.0}}},
              {"nonlinearity", {{"name", "quadratic"}, {"alpha", {{"base", 1.0}, {"amplitude", 0.5},
                                                                 {"time_frequency", pi}, {"wavenumber", {1, 0}}}}}},
              {"recovery", {{"delta", kDelta}, {"noise_level", 0.01},
                            {"probe_points", {{{"t0", 0.6}}, {{"t0", 1.0}, {"face", 1}}}}}},
              {"seed", 11}};
  ExperimentConfig cfg = parse_config(raw);
  const std::string a = run_experiment(cfg).dump(2);
  cfg.threads = 2;
  const std::string b = run_experiment(cfg).dump(2);
  o.require(a == b, "seeded reports byte-identical");

  SimulationOptions opt;
  opt.background = Background::constant;
  opt.partial = PartialDataFaces{{1.0, 0.0}, 0.0};
  const auto src = simulate_measurements(catalog::cubic(), interval_grid(pi, 32, 1.0), opt);
  const BoundaryPortion all{"all", -1, 0.0, 0.0};
  auto rejects = [&](const LinearData& in) {
    try {
      src->apply(0.2, in, all);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::config;
    }
    return false;
  };
  LinearData on_U;
  on_U.h = [](double t, Point x) { return x.x > 1.0 ? Complex(t * t, 0.0) : Complex(0.0, 0.0); };
  LinearData h0 = on_U;
  h0.h0 = [](Point x) { return Complex(std::sin(x.x), 0.0); };
  LinearData off_U;
  off_U.h = [](double t, Point) { return Complex(t * t, 0.0); };
  bool accepted = true;
  try {
    src->apply(0.2, on_U, all);
  } catch (const Error&) {
    accepted = false;
  }
  o.require(accepted, "input on U accepted");
  o.require(rejects(h0), "h0 != 0 rejected");
  o.require(rejects(off_U), "support off U rejected");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"forward convergence", forward_convergence},
      {"oracle equivalence", oracle_equivalence},
      {"blow-up detection", blowup_detection},
      {"Frechet quadratic remainder", frechet_remainder},
      {"mollifier scaling", mollifier_scaling},
      {"GO certification", go_certification},
      {"boundary potential recovery", boundary_recovery},
      {"end-to-end nonlinearity recovery", nonlinearity_recovery},
      {"t = 0 interior identity", initial_identity},
      {"determinism and restriction contracts", determinism_and_restrictions},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, seconds_since(t0),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
