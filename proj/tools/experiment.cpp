#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "wavenl/forward.hpp"
#include "wavenl/linearization.hpp"
#include "wavenl/numerics.hpp"
#include "wavenl/probe.hpp"
#include "wavenl/recovery.hpp"
#include "wavenl/smooth.hpp"

namespace wavenl::cli {

namespace fs = std::filesystem;

const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::forward: return "forward";
    case Pipeline::frechet_check: return "frechet_check";
    case Pipeline::probe_certify: return "probe_certify";
    case Pipeline::recover_boundary: return "recover_boundary";
    case Pipeline::recover_nonlinearity: return "recover_nonlinearity";
    case Pipeline::recover_initial: return "recover_initial";
  }
  return "?";
}

std::optional<Pipeline> parse_pipeline(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  for (Pipeline p : {Pipeline::forward, Pipeline::frechet_check, Pipeline::probe_certify, Pipeline::recover_boundary,
                     Pipeline::recover_nonlinearity, Pipeline::recover_initial})
    if (n == to_string(p)) return p;
  return std::nullopt;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::blowup:
    case ErrorKind::divergence:
    case ErrorKind::evaluation:
    case ErrorKind::range: return 3;
    case ErrorKind::resolution: return 4;
    default: return 2;
  }
}

json error_json(const Error& e) {
  json d = json::object();
  for (const auto& [k, v] : e.details()) d[k] = v;
  return {{"error", {{"kind", wavenl::to_string(e.kind())}, {"message", e.what()}, {"details", d},
                     {"exit_code", exit_code(e.kind())}}}};
}

std::string config_hash(const json& raw) {
  json c = raw;
  c.erase("output");
  c.erase("threads");
  const std::string s = c.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::config, msg); }

const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("config needs '") + key + "'");
  return j.at(key);
}

double num(const json& j, const char* key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number()) bad(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::vector<double> nums(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  std::vector<double> v;
  for (const auto& e : j.at(key)) {
    if (!e.is_number()) bad(std::string("'") + key + "' must hold numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

// ---------------------------------------------------------------- builders

Domain make_domain(const json& j) {
  const std::string kind = need(j, "kind").get<std::string>();
  const double collar = num(j, "collar", 0.0);
  if (kind == "interval") return Domain::interval(num(j, "length", std::numbers::pi), collar);
  if (kind == "rectangle") return Domain::rectangle(num(j, "lx", std::numbers::pi), num(j, "ly", std::numbers::pi), collar);
  if (kind == "disk") return Domain::disk(num(j, "radius", 1.0), collar);
  bad("unknown domain kind '" + kind + "'");
}

SpaceTimeGrid make_grid(const json& j, const Domain& d) {
  const auto cells = nums(j, "cells", {});
  if (cells.empty() || cells.size() > 2) bad("grid.cells needs one or two entries");
  std::array<int, 2> c{static_cast<int>(cells[0]), cells.size() > 1 ? static_cast<int>(cells[1]) : 0};
  if (d.dimension() == 2 && cells.size() != 2) bad("two-dimensional domains need two cell counts");
  SpatialGrid space(d, c);
  const double T = num(j, "T", 1.0);
  const int steps = static_cast<int>(num(j, "steps", 0.0));
  return steps > 0 ? SpaceTimeGrid(space, steps, T) : SpaceTimeGrid::with_cfl(space, T);
}

// base + amplitude * sin(time_frequency t) * cos(kx x) cos(ky y) * e bump(|x - c| / r);
// each factor is dropped when its key is absent.
SpaceTimeFn make_field(const json& j) {
  if (j.is_number()) {
    const double c = j.get<double>();
    return [c](double, Point) { return c; };
  }
  if (!j.is_object()) bad("field must be a number or an object");
  const double base = num(j, "base", 0.0), amp = num(j, "amplitude", 0.0);
  const bool has_w = j.contains("time_frequency"), has_k = j.contains("wavenumber"), has_b = j.contains("bump");
  const double w = num(j, "time_frequency", 0.0);
  const auto k = nums(j, "wavenumber", {0.0, 0.0});
  if (k.size() != 2 && has_k) bad("wavenumber needs two entries");
  Point c{};
  double r = 1.0;
  if (has_b) {
    const json& b = j.at("bump");
    const auto cc = nums(b, "center", {0.0, 0.0});
    if (cc.size() != 2) bad("bump center needs two entries");
    c = {cc[0], cc[1]};
    r = num(b, "radius", 1.0);
    if (!(r > 0.0)) bad("bump radius must be positive");
  }
  return [=](double t, Point x) {
    double v = amp;
    if (has_w) v *= std::sin(w * t);
    if (has_k) v *= std::cos(k[0] * x.x) * std::cos(k[1] * x.y);
    if (has_b) v *= std::exp(1.0) * bump(std::hypot(x.x - c.x, x.y - c.y) / r);
    return base + v;
  };
}

Nonlinearity make_nonlinearity(const json& j) {
  const std::string name = need(j, "name").get<std::string>();
  if (name == "zero") return catalog::zero();
  if (name == "cubic") return catalog::cubic();
  if (name == "blowup_quadratic") return catalog::blowup_quadratic();
  if (name == "linear") return catalog::linear(make_field(need(j, "m")));
  if (name == "quadratic") return catalog::quadratic(make_field(need(j, "alpha")));
  bad("unknown catalog entry '" + name + "'");
}

DirichletData make_data(const json& j, const Domain& d) {
  const std::string type = need(j, "type").get<std::string>();
  if (type == "zero") return DirichletData::zero();
  if (type == "constant") return DirichletData::constant(num(j, "lambda", 0.0));
  if (type == "sine") {
    if (d.kind() == DomainKind::disk) bad("sine data is defined on intervals and rectangles");
    const double a = num(j, "amplitude", 1.0);
    const double lx = d.extent(0), ly = d.dimension() == 2 ? d.extent(1) : 0.0;
    DirichletData g = DirichletData::zero();
    g.u0 = [=](Point x) {
      double v = a * std::sin(std::numbers::pi * x.x / lx);
      if (ly > 0.0) v *= std::sin(std::numbers::pi * x.y / ly);
      return v;
    };
    return g;
  }
  bad("unknown data type '" + type + "'");
}

ProbeSpec make_probe(const json& j) {
  ProbeSpec s;
  s.t0 = num(j, "t0", 0.0);
  s.face = static_cast<int>(num(j, "face", 0.0));
  s.s0 = num(j, "s0", 0.0);
  s.delta = num(j, "delta", 0.0);
  s.plateau = num(j, "plateau", 0.0);
  return s;
}

RecoveryConfig make_recovery(const json& j, int threads) {
  RecoveryConfig c;
  c.lambda_grid = nums(j, "lambda_grid", {-1.0, -0.5, 0.0, 0.5, 1.0});
  c.delta = num(j, "delta", 0.03);
  c.rho_ladder = nums(j, "rho_ladder", default_rho_ladder(c.delta));
  c.points_per_wavelength = num(j, "points_per_wavelength", 30.0);
  c.plateau = num(j, "plateau", 0.0);
  c.threads = threads;
  for (const auto& p : need(j, "probe_points"))
    c.probe_points.push_back({num(p, "t0", 0.0), static_cast<int>(num(p, "face", 0.0)), num(p, "s0", 0.0)});
  return c;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = std::log(x[k]), b = std::log(y[k]);
    sx += a, sy += b, sxx += a * a, sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

json chart(const std::string& name, const char* kind, const std::string& table, const std::string& x,
           std::vector<std::string> y, const std::string& title) {
  return {{"name", name}, {"kind", kind}, {"table", table}, {"x", x}, {"y", y}, {"title", title}};
}

// ---------------------------------------------------------------- pipelines

struct Context {
  const ExperimentConfig& cfg;
  Domain domain;
  SpaceTimeGrid grid;
  json results = json::object();
  json tables = json::object();
  json charts = json::array();
};

void run_forward(Context& c) {
  const json& r = c.cfg.raw;
  const Nonlinearity F = make_nonlinearity(need(r, "nonlinearity"));
  const json& dj = need(r, "data");
  const DirichletData G = make_data(dj, c.domain);
  const WaveField u = solve_semilinear(F, G, c.grid);
  const bool constant = dj.at("type") == "constant";
  const double lambda = num(dj, "lambda", 0.0);
  double dev = 0.0;
  Table hist{{"t", "max_abs_u"}, {}};
  const int stride = std::max(1, u.levels() / 200);
  for (int n = 0; n < u.levels(); ++n) {
    double m = 0.0;
    for (double v : u.real_level(n)) {
      m = std::max(m, std::abs(v));
      if (constant) dev = std::max(dev, std::abs(v - lambda));
    }
    if (n % stride == 0 || n == u.levels() - 1) hist.rows.push_back({c.grid.time(n), m});
  }
  c.results["sup_abs_u"] = tagged(u.max_abs());
  c.results["final_time"] = tagged(c.grid.T(), "config");
  c.results["steps"] = tagged(c.grid.steps(), "computed");
  if (constant) c.results["max_abs_deviation_from_lambda"] = tagged(dev);
  c.tables["history"] = hist.to_json();
  c.charts.push_back(chart("history", "line", "history", "t", {"max_abs_u"}, "max |u| over time"));
}

void run_frechet(Context& c) {
  const json& r = c.cfg.raw;
  const Nonlinearity F = make_nonlinearity(need(r, "nonlinearity"));
  const DirichletData G = make_data(need(r, "data"), c.domain);
  const DirichletData H = make_data(need(r, "direction"), c.domain);
  const auto scales = nums(r, "scales", {0.4, 0.2, 0.1, 0.05});
  const BoundaryPortion portion{"gamma", 0, 0.0, c.domain.face_length(0)};
  const RemainderReport rep = frechet_remainder_check(F, G, H, c.grid, portion, scales, c.cfg.threads);
  Table t{{"scale", "remainder", "identity_residual"}, {}};
  std::vector<double> ratios;
  for (std::size_t k = 0; k < rep.scales.size(); ++k) {
    t.rows.push_back({rep.scales[k], rep.remainders[k], rep.identity_residuals[k]});
    if (k > 0) ratios.push_back(rep.remainders[k - 1] / rep.remainders[k]);
  }
  c.results["fitted_order"] = tagged(rep.fitted_order);
  c.results["identity_slope"] = tagged(rep.identity_slope);
  c.results["degenerate"] = tagged(rep.degenerate);
  c.results["remainder_ratios"] = tagged(ratios);
  c.tables["remainder"] = t.to_json();
  c.charts.push_back(chart("remainder", "loglog", "remainder", "scale", {"remainder", "identity_residual"},
                           "Frechet remainder and identity residual"));
}

void run_probe_certify(Context& c) {
  const json& r = c.cfg.raw;
  const Potential q = Potential::sample(c.grid, make_field(need(r, "potential")));
  ProbeSpec spec = make_probe(need(r, "probe"));
  const auto ladder = nums(r, "rho_ladder", {20.0, 40.0, 80.0});
  if (ladder.size() < 2) bad("rho_ladder needs at least two entries");
  spec.rho = ladder.front();
  validate_probe(c.domain, spec, c.grid.T());
  const std::size_t L = ladder.size();
  std::vector<double> a1(L), a2(L), res(L), rem(L), h2(L);
  parallel_for(L, c.cfg.threads, [&](std::size_t k) {
    ProbeSpec s = spec;
    s.rho = ladder[k];
    const GoProbe p = build_go_probe(c.domain, q, s);
    a1[k] = p.boundary_max(1);
    a2[k] = p.boundary_max(2);
    res[k] = ansatz_residual(p, q).scaled;
    rem[k] = solve_remainder(p, q, c.grid).scaled_trace;
    h2[k] = p.a2_h2_norm();
  });
  Table t{{"rho", "boundary_max_a1", "boundary_max_a2", "scaled_residual", "scaled_remainder", "a2_h2"}, {}};
  for (std::size_t k = 0; k < L; ++k) t.rows.push_back({ladder[k], a1[k], a2[k], res[k], rem[k], h2[k]});
  c.results["boundary_max_a1"] = tagged(*std::max_element(a1.begin(), a1.end()));
  c.results["boundary_max_a2"] = tagged(*std::max_element(a2.begin(), a2.end()));
  c.results["residual_decreasing"] = tagged(strictly_decreasing(res));
  c.results["remainder_decreasing"] = tagged(strictly_decreasing(rem));
  c.results["a2_h2_slope"] = tagged(loglog_slope(ladder, h2));
  c.results["a2_h2_slope_bound"] = tagged(c.domain.dimension() / (c.domain.dimension() + 2.0) + 0.1, "config");
  c.tables["probe_ladder"] = t.to_json();
  c.charts.push_back(chart("probe_ladder", "loglog", "probe_ladder", "rho",
                           {"scaled_residual", "scaled_remainder", "a2_h2"}, "probe certification"));

  if (r.contains("constant_difference")) {
    const double cd = num(r, "constant_difference", 0.0);
    ProbeSpec s = spec;
    s.rho = ladder.back();
    const auto [p1, p2] =
        build_probe(c.domain, Potential::constant(c.grid, cd), Potential::constant(c.grid, 0.0), s);
    const Complex dd = p1.inward_derivative(1, s.t0, s.s0) - p2.inward_derivative(1, s.t0, s.s0);
    const Complex want(0.0, 0.5 * cd);
    c.results["constant_difference_relative_error"] = tagged(std::abs(dd - want) / std::abs(want));
  }

  const auto mrhos = nums(r, "mollifier_rhos", {10.0, 20.0, 40.0, 80.0});
  if (!mrhos.empty()) {
    std::vector<double> e2(mrhos.size()), n3(mrhos.size()), n4(mrhos.size());
    parallel_for(mrhos.size(), c.cfg.threads, [&](std::size_t k) {
      const Potential m = mollify_potential(q, mrhos[k]);
      std::vector<double> diff(q.values().size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = m.values()[i] - q.values()[i];
      e2[k] = Potential(c.grid, diff).h2_norm();
      n3[k] = m.hl_norm(3);
      n4[k] = m.hl_norm(4);
    });
    Table mt{{"rho", "h2_error", "h3_norm", "h4_norm"}, {}};
    for (std::size_t k = 0; k < mrhos.size(); ++k) mt.rows.push_back({mrhos[k], e2[k], n3[k], n4[k]});
    c.results["mollifier_h2_decreasing"] = tagged(strictly_decreasing(e2));
    c.results["mollifier_h3_slope"] = tagged(loglog_slope(mrhos, n3));
    c.results["mollifier_h4_slope"] = tagged(loglog_slope(mrhos, n4));
    const double n = c.domain.dimension();
    c.results["mollifier_h3_target"] = tagged(1.0 / (n + 2.0), "config");
    c.results["mollifier_h4_target"] = tagged(2.0 / (n + 2.0), "config");
    c.tables["mollifier"] = mt.to_json();
    c.charts.push_back(chart("mollifier", "loglog", "mollifier", "rho", {"h2_error", "h3_norm", "h4_norm"},
                             "mollifier norms"));
  }
}

void run_recover_boundary(Context& c) {
  const json& r = c.cfg.raw;
  const SpaceTimeFn qf = make_field(need(r, "potential"));
  const Potential q = Potential::sample(c.grid, qf);
  const RecoveryConfig rc = make_recovery(need(r, "recovery"), c.cfg.threads);
  rc.validate(c.domain, c.grid.T());
  const std::size_t np = rc.probe_points.size();
  std::vector<PointEstimate> est(np);
  std::vector<double> control(np);
  parallel_for(np, c.cfg.threads, [&](std::size_t i) {
    const ProbePoint& p = rc.probe_points[i];
    std::vector<ProbeMeasurement> ladder;
    for (double rho : rc.rho_ladder) {
      ProbeSpec s{p.t0, p.face, p.s0, rc.delta, rho, rc.plateau, 0.0, ""};
      ProbeWindow w = make_probe_window(c.domain, s, rc.points_per_wavelength);
      ladder.push_back({s, w, probe_trace(w, s, q), probe_trace_free(w, s)});
    }
    est[i] = recover_q_difference_point(ladder);
    for (auto& m : ladder) m.trace2 = m.trace1;
    control[i] = std::abs(recover_q_difference_point(ladder).estimate);
  });
  Table t{{"t0", "x", "y", "truth", "value", "imag_residual", "relative_error", "sigma", "extrapolation_warning",
           "reliability_warning"},
          {}};
  double max_rel = 0.0, max_abs = 0.0, max_imag = 0.0, scale = 0.0;
  for (const PointEstimate& e : est) scale = std::max(scale, std::abs(qf(e.t0, e.x0)));
  int warnings = 0;
  for (std::size_t i = 0; i < np; ++i) {
    const PointEstimate& e = est[i];
    const double truth = qf(e.t0, e.x0);
    // Relative error is undefined where the truth vanishes.
    const bool defined = std::abs(truth) > 1e-8 * scale;
    const double rel = defined ? std::abs(e.value - truth) / std::abs(truth) : std::nan("");
    if (defined) max_rel = std::max(max_rel, rel);
    max_abs = std::max(max_abs, std::abs(e.value - truth));
    max_imag = std::max(max_imag, e.imag_ratio);
    warnings += e.extrapolation_warning + e.reliability_warning;
    t.rows.push_back({e.t0, e.x0.x, e.x0.y, truth, e.value, e.imag_ratio, rel, e.sigma,
                      static_cast<double>(e.extrapolation_warning), static_cast<double>(e.reliability_warning)});
  }
  c.results["max_relative_error"] = tagged(max_rel);
  c.results["max_abs_error"] = tagged(max_abs);
  c.results["max_imag_residual"] = tagged(max_imag);
  c.results["control_max_abs"] = tagged(*std::max_element(control.begin(), control.end()));
  c.results["truth_scale"] = tagged(scale);
  c.results["warnings"] = tagged(warnings);
  c.results["reference_potential"] = tagged(0.0, "config");
  Table ov{{"point", "truth", "value"}, {}};
  for (std::size_t i = 0; i < np; ++i) ov.rows.push_back({static_cast<double>(i), t.rows[i][3], t.rows[i][4]});
  c.tables["estimates"] = t.to_json();
  c.tables["overlay"] = ov.to_json();
  c.charts.push_back(chart("overlay", "line", "overlay", "point", {"truth", "value"}, "recovered vs true q"));
}

void run_recover_nonlinearity(Context& c) {
  const json& r = c.cfg.raw;
  const json& nj = need(r, "nonlinearity");
  const Nonlinearity F = make_nonlinearity(nj.contains("truth") ? nj.at("truth") : nj);
  const json& rj = need(r, "recovery");
  const RecoveryConfig rc = make_recovery(rj, c.cfg.threads);
  SimulationOptions so;
  so.chi_ramp = num(rj, "chi_ramp", 0.1);
  so.noise_level = num(rj, "noise_level", 0.0);
  so.seed = c.cfg.seed;
  const auto source = simulate_measurements(F, c.grid, so);
  // Recovery sees only the source.
  const LateralRecovery R = recover_duF_lateral(*source, rc, c.domain, c.grid.T());

  const std::size_t np = R.points.size(), nl = R.lambdas.size();
  std::vector<std::vector<double>> S(np);
  std::vector<double> anchor(np);
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t l = 0; l < nl; ++l) S[i].push_back(R.value(i, l));
    anchor[i] = F.value(R.points[i].t0, R.positions[i], 0.0);
  }
  const auto Frec = assemble_F(S, R.lambdas, anchor);

  Table t{{"point", "t0", "x", "y", "lambda", "duF", "duF_true", "F", "F_true", "imag_residual",
           "extrapolation_warning", "reliability_warning"},
          {}};
  Table curves{{"lambda"}, {}};
  for (std::size_t i = 0; i < np; ++i) {
    curves.columns.push_back("F_rec_" + std::to_string(i));
    curves.columns.push_back("F_true_" + std::to_string(i));
  }
  double errF = 0.0, scaleF = 0.0, errD = 0.0, scaleD = 0.0, worst_slope = 0.0;
  std::vector<double> slopes, slopes_true;
  for (std::size_t i = 0; i < np; ++i) {
    const double t0 = R.points[i].t0;
    const Point x = R.positions[i];
    double sxy = 0.0, sxx = 0.0, txy = 0.0;
    for (std::size_t l = 0; l < nl; ++l) {
      const double lam = R.lambdas[l];
      const PointEstimate& e = R.estimates[i][l];
      const double dtrue = F.d_u(t0, x, lam), ftrue = F.value(t0, x, lam);
      errF = std::max(errF, std::abs(Frec[i][l] - ftrue));
      scaleF = std::max(scaleF, std::abs(ftrue));
      errD = std::max(errD, std::abs(e.value - dtrue));
      scaleD = std::max(scaleD, std::abs(dtrue));
      sxy += lam * e.value, sxx += lam * lam, txy += lam * dtrue;
      t.rows.push_back({static_cast<double>(i), t0, x.x, x.y, lam, e.value, dtrue, Frec[i][l], ftrue, e.imag_ratio,
                        static_cast<double>(e.extrapolation_warning), static_cast<double>(e.reliability_warning)});
    }
    slopes.push_back(sxy / sxx);
    slopes_true.push_back(txy / sxx);
    if (txy != 0.0) worst_slope = std::max(worst_slope, std::abs(sxy - txy) / std::abs(txy));
  }
  for (std::size_t l = 0; l < nl; ++l) {
    std::vector<double> row{R.lambdas[l]};
    for (std::size_t i = 0; i < np; ++i) {
      row.push_back(Frec[i][l]);
      row.push_back(F.value(R.points[i].t0, R.positions[i], R.lambdas[l]));
    }
    curves.rows.push_back(row);
  }
  c.results["sup_relative_error"] = tagged(scaleF > 0.0 ? errF / scaleF : errF);
  c.results["sup_relative_error_duF"] = tagged(scaleD > 0.0 ? errD / scaleD : errD);
  c.results["lambda_slopes"] = tagged(slopes);
  c.results["lambda_slopes_true"] = tagged(slopes_true);
  c.results["max_slope_relative_error"] = tagged(worst_slope);
  c.results["anchor"] = tagged(anchor, "catalog");
  c.results["chi_ramp"] = tagged(so.chi_ramp, "config");
  c.tables["duF"] = t.to_json();
  c.tables["F_curves"] = curves.to_json();
  std::vector<std::string> ys(curves.columns.begin() + 1, curves.columns.end());
  c.charts.push_back(chart("F_overlay", "line", "F_curves", "lambda", ys, "recovered vs true F"));
}

void run_recover_initial(Context& c) {
  const json& r = c.cfg.raw;
  const json& nj = need(r, "nonlinearity");
  const Nonlinearity F = make_nonlinearity(nj.contains("truth") ? nj.at("truth") : nj);
  const auto lambdas = nums(r.value("recovery", json::object()), "lambda_grid", {-1.0, -0.5, 0.0, 0.5, 1.0});
  const SpatialGrid& g = c.grid.space();
  std::vector<double> anchor(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) anchor[k] = F.value(0.0, g.node(k), 0.0);
  const InitialRecovery rec = recover_F_initial_interior(F, lambdas, c.grid, anchor);
  // Errors relative to the sup of the truth over nodes and lambda.
  double scaleD = 0.0, scaleF = 0.0;
  for (double lam : lambdas)
    for (std::size_t k = 0; k < g.size(); ++k) {
      scaleD = std::max(scaleD, std::abs(F.d_u(0.0, g.node(k), lam)));
      scaleF = std::max(scaleF, std::abs(F.value(0.0, g.node(k), lam)));
    }
  if (scaleD == 0.0) scaleD = 1.0;
  if (scaleF == 0.0) scaleF = 1.0;
  double errD = 0.0, errF = 0.0;
  Table t{{"lambda", "max_rel_error_duF", "max_rel_error_F"}, {}};
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    double eD = 0.0, eF = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.node(k);
      eD = std::max(eD, std::abs(rec.duF[l][k] - F.d_u(0.0, x, lambdas[l])) / scaleD);
      eF = std::max(eF, std::abs(rec.F[l][k] - F.value(0.0, x, lambdas[l])) / scaleF);
    }
    errD = std::max(errD, eD);
    errF = std::max(errF, eF);
    t.rows.push_back({lambdas[l], eD, eF});
  }
  c.results["max_relative_error_duF"] = tagged(errD);
  c.results["max_relative_error_F"] = tagged(errF);
  c.results["oracle_mode"] = tagged(rec.oracle_mode);
  c.tables["initial"] = t.to_json();
  c.charts.push_back(chart("initial", "line", "initial", "lambda", {"max_rel_error_duF", "max_rel_error_F"},
                           "t = 0 identity errors"));
}

json redacted_config(const json& raw) {
  json c = raw;
  c.erase("output");
  c.erase("threads");
  if (c.contains("nonlinearity") && c["nonlinearity"].value("hidden", false))
    c["nonlinearity"] = {{"name", "hidden"}};
  return c;
}

}  // namespace

ExperimentConfig parse_config(const json& raw, std::optional<Pipeline> pipeline) {
  try {
    if (!raw.is_object()) bad("config must be a JSON object");
    const int version = static_cast<int>(num(raw, "schema_version", -1.0));
    if (version != kSchemaVersion) throw Error(ErrorKind::config, "unsupported schema_version",
                                               {{"schema_version", version}, {"supported", kSchemaVersion}});
    ExperimentConfig c;
    c.raw = raw;
    std::optional<Pipeline> file;
    if (raw.contains("pipeline")) {
      file = parse_pipeline(raw.at("pipeline").get<std::string>());
      if (!file) bad("unknown pipeline '" + raw.at("pipeline").get<std::string>() + "'");
    }
    if (pipeline && file && *pipeline != *file) bad("config pipeline does not match the subcommand");
    if (!pipeline && !file) bad("config needs 'pipeline'");
    c.pipeline = pipeline ? *pipeline : *file;
    c.raw["pipeline"] = to_string(c.pipeline);
    c.seed = static_cast<std::uint64_t>(num(raw, "seed", 1.0));
    c.threads = std::max(1, static_cast<int>(num(raw, "threads", 1.0)));
    if (raw.contains("output")) c.output = raw.at("output").get<std::string>();
    // Catalog, domain and grid checks up front.
    const Domain d = make_domain(need(raw, "domain"));
    (void)make_grid(need(raw, "grid"), d);
    if (raw.contains("nonlinearity")) {
      const json& nj = raw.at("nonlinearity");
      (void)make_nonlinearity(nj.contains("truth") ? nj.at("truth") : nj);
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path, std::optional<Pipeline> pipeline) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config " + path.string());
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(raw, pipeline);
}

json run_experiment(const ExperimentConfig& cfg) {
  try {
    const Domain d = make_domain(need(cfg.raw, "domain"));
    Context c{cfg, d, make_grid(need(cfg.raw, "grid"), d)};
    switch (cfg.pipeline) {
      case Pipeline::forward: run_forward(c); break;
      case Pipeline::frechet_check: run_frechet(c); break;
      case Pipeline::probe_certify: run_probe_certify(c); break;
      case Pipeline::recover_boundary: run_recover_boundary(c); break;
      case Pipeline::recover_nonlinearity: run_recover_nonlinearity(c); break;
      case Pipeline::recover_initial: run_recover_initial(c); break;
    }
    json report;
    report["schema_version"] = kSchemaVersion;
    report["pipeline"] = to_string(cfg.pipeline);
    report["config_hash"] = config_hash(cfg.raw);
    report["seed"] = tagged(cfg.seed, "config");
    report["config"] = redacted_config(cfg.raw);
    report["config"]["provenance"] = "config";
    report["grid"] = {{"steps", tagged(c.grid.steps())},
                      {"dt", tagged(c.grid.dt())},
                      {"T", tagged(c.grid.T(), "config")},
                      {"nodes", tagged(c.grid.space().size())}};
    report["results"] = c.results;
    report["tables"] = c.tables;
    report["charts"] = c.charts;
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed config: ") + e.what());
  }
}

}  // namespace wavenl::cli
