#include "wavenl/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "wavenl/error.hpp"
#include "wavenl/numerics.hpp"
#include "wavenl/smooth.hpp"

namespace wavenl {

namespace {

constexpr Complex kI(0.0, 1.0);

SpaceTimeGrid cfl_grid(SpatialGrid space, double T, int min_steps = 8) {
  const int steps = std::max(min_steps, static_cast<int>(std::ceil(T / (0.5 * space.min_spacing()) - 1e-9)));
  return SpaceTimeGrid(std::move(space), steps, T);
}

std::uint64_t mix(std::uint64_t h, double v) { return fnv1a(&v, sizeof v, h); }

}  // namespace

// ------------------------------------------------------------ windows

Point ProbeWindow::to_global(Point p) const {
  if (local.kind() == DomainKind::interval) return global.exp_boundary(face, 0.0, p.x);
  return global.exp_boundary(face, s_lo + p.x, p.y);
}

LinearData ProbeWindow::probe_data(const ProbeSpec& spec) const {
  const ComplexBoundaryFn f = probe_boundary_fn(global, spec);
  LinearData d;
  d.complex_valued = true;
  const ProbeWindow self = *this;
  d.h = [f, self](double t, Point x) { return f(self.t_start + t, self.to_global(x)); };
  return d;
}

Potential ProbeWindow::restrict(const Potential& q) const {
  const double hq = q.grid().space().max_spacing();
  const double Tw = grid.T();
  std::array<int, 2> cells{};
  if (local.kind() == DomainKind::interval) {
    cells = {std::max(8, static_cast<int>(std::ceil(local.extent(0) / hq))), 0};
  } else {
    cells = {std::max(8, static_cast<int>(std::ceil(local.extent(0) / hq))),
             std::max(8, static_cast<int>(std::ceil(local.extent(1) / hq)))};
  }
  const int steps = std::max(8, static_cast<int>(std::ceil(Tw / q.grid().dt())));
  SpatialGrid sg(local, cells);
  const int cfl_steps = static_cast<int>(std::ceil(Tw / (0.5 * sg.min_spacing()) - 1e-9));
  const SpaceTimeGrid g(std::move(sg), std::max(steps, cfl_steps), Tw);
  const ProbeWindow& self = *this;
  return Potential::sample(g, [&](double t, Point x) { return q.at(self.t_start + t, self.to_global(x)); });
}

ProbeWindow make_probe_window(const Domain& domain, const ProbeSpec& spec, double ppw) {
  if (domain.kind() == DomainKind::disk)
    throw Error(ErrorKind::config, "probe windows need a flat probe face");
  if (!(spec.delta > 0.0) || !(spec.rho > 1.0))
    throw Error(ErrorKind::config, "probe needs delta > 0 and rho > 1");
  if (!(ppw >= 8.0)) throw Error(ErrorKind::config, "at least 8 points per wavelength");
  const double h = 2.0 * std::numbers::pi / (ppw * spec.rho);
  const double margin = 12.0 * h;
  const double t_start = std::max(0.0, spec.t0 - 2.0 * spec.delta);
  const double Tw = spec.t0 + 0.25 * spec.delta - t_start;
  // A side at distance D disturbs the filter support only after a round trip.
  const double spread = 0.5 * Tw + margin;
  auto cells = [h](double len) { return std::max(8, static_cast<int>(std::ceil(len / h))); };
  if (domain.kind() == DomainKind::interval) {
    const double depth = std::min(spread, domain.extent(0));
    Domain local = Domain::interval(depth);
    SpatialGrid sg(local, {cells(depth), 0});
    return {domain, local, spec.face, 0.0, t_start, cfl_grid(std::move(sg), Tw)};
  }
  const double len = domain.face_length(spec.face);
  const double reach =
      std::max(0.5 * (Tw + spec.plateau_width() + 1.25 * spec.delta), Tw + 0.25 * spec.delta) + margin;
  const double s_lo = std::max(0.0, spec.s0 - reach);
  const double s_hi = std::min(len, spec.s0 + reach);
  const double across = (spec.face == 0 || spec.face == 2) ? domain.extent(1) : domain.extent(0);
  const double depth = std::min(spread, across);
  Domain local = Domain::rectangle(s_hi - s_lo, depth);
  SpatialGrid sg(local, {cells(s_hi - s_lo), cells(depth)});
  return {domain, local, spec.face, s_lo, t_start, cfl_grid(std::move(sg), Tw)};
}

BoundaryTrace probe_trace(const ProbeWindow& window, const ProbeSpec& spec, const Potential& q) {
  const Potential qw = window.restrict(q);
  return dtn_apply(qw, window.probe_data(spec), window.grid, window.probe_face(), DtnMode::lateral_only).trace;
}

BoundaryTrace probe_trace_free(const ProbeWindow& window, const ProbeSpec& spec) {
  return dtn_apply_free(window.probe_data(spec), window.grid, window.probe_face(), DtnMode::lateral_only).trace;
}

// ------------------------------------------------------ point estimate

namespace {

// Response of the one-sided trace stencil (3 u0 - 4 u1 + u2) / 2h to the
// profile n e^{-i kappa n}, relative to the exact derivative; kappa is the
// leapfrog wavenumber of frequency rho.
Complex stencil_gain(double rho, double dt, double h) {
  if (!(h > 0.0)) return {1.0, 0.0};
  const double s = std::clamp(h / dt * std::sin(0.5 * rho * dt), -1.0, 1.0);
  const double th = 2.0 * std::asin(s);
  return 2.0 * std::polar(1.0, -th) - std::polar(1.0, -2.0 * th);
}

}  // namespace

Complex matched_filter(const ProbeMeasurement& r) {
  const BoundaryTrace d = r.trace1 - r.trace2;
  const ProbeSpec& p = r.probe;
  const double half = 0.25 * p.delta;
  const bool two = r.window.local.dimension() == 2;
  Complex acc(0.0, 0.0);
  double mass = 0.0;
  for (int n = 0; n < d.levels; ++n) {
    const double t = r.window.global_time(n);
    const double wt = bump((t - p.t0) / half);
    if (wt == 0.0) continue;
    for (std::size_t j = 0; j < d.width(); ++j) {
      const double ws = two ? bump((r.window.global_s(d.nodes[j]) - p.s0) / half) : 1.0;
      if (ws == 0.0) continue;
      const double w = wt * ws * d.tangential_weight(j);
      // Outward trace; the inward derivative carries the opposite sign.
      acc -= w * p.rho * d.at(n, j) * std::polar(1.0, -p.rho * t) / stencil_gain(p.rho, d.dt, d.nodes[j].h);
      mass += w;
    }
  }
  if (!(mass > 0.0)) throw Error(ErrorKind::config, "filter window misses the trace samples");
  return acc / mass;
}

namespace {

struct Fit {
  Complex limit{};
  Complex c{};
  double sigma = 0.0;
  double residual = 0.0;
};

// Least squares m_k = a + c r_k^-sigma for fixed sigma.
Fit fit_fixed(const std::vector<double>& r, const std::vector<Complex>& m, double sigma) {
  double s11 = 0.0, s12 = 0.0, s22 = 0.0;
  Complex b1(0.0, 0.0), b2(0.0, 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double x = std::pow(r[k], -sigma);
    s11 += 1.0;
    s12 += x;
    s22 += x * x;
    b1 += m[k];
    b2 += x * m[k];
  }
  const double det = s11 * s22 - s12 * s12;
  Fit f;
  f.sigma = sigma;
  f.limit = (s22 * b1 - s12 * b2) / det;
  f.c = (s11 * b2 - s12 * b1) / det;
  for (std::size_t k = 0; k < r.size(); ++k) f.residual += std::norm(m[k] - f.limit - f.c * std::pow(r[k], -sigma));
  return f;
}

}  // namespace

PointEstimate recover_q_difference_point(const std::vector<ProbeMeasurement>& ladder) {
  if (ladder.empty()) throw Error(ErrorKind::config, "empty rho ladder");
  PointEstimate e;
  const ProbeSpec& p0 = ladder.front().probe;
  e.t0 = p0.t0;
  e.x0 = ladder.front().window.global.boundary_point(p0.face, p0.s0);
  for (const auto& rung : ladder) {
    e.rho.push_back(rung.probe.rho);
    e.filtered.push_back(matched_filter(rung));
  }
  if (ladder.size() == 1) {
    e.limit = e.filtered[0];
  } else if (ladder.size() == 2) {
    const Fit f = fit_fixed(e.rho, e.filtered, 1.0);
    e.limit = f.limit;
    e.sigma = 1.0;
  } else {
    Fit best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 275; ++k) {
      const Fit f = fit_fixed(e.rho, e.filtered, 0.25 + 0.01 * k);
      if (f.residual < best.residual) best = f;
    }
    e.limit = best.limit;
    e.sigma = best.sigma;
  }
  std::vector<std::size_t> order(e.rho.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return e.rho[a] < e.rho[b]; });
  for (std::size_t k = 1; k < order.size(); ++k)
    if (std::abs(e.filtered[order[k]] - e.limit) > std::abs(e.filtered[order[k - 1]] - e.limit))
      e.extrapolation_warning = true;
  e.estimate = -2.0 * kI * e.limit;
  e.value = e.estimate.real();
  const double mod = std::abs(e.estimate);
  e.imag_ratio = mod > 0.0 ? std::abs(e.estimate.imag()) / mod : 0.0;
  e.reliability_warning = e.imag_ratio > 0.2;
  return e;
}

// --------------------------------------------------------- partial data

bool PartialDataFaces::in_U(const Domain& d, int face, double s) const {
  const Point n = d.outward_normal(face, s);
  return n.x * omega.x + n.y * omega.y >= -margin;
}

bool PartialDataFaces::in_V(const Domain& d, int face, double s) const {
  const Point n = d.outward_normal(face, s);
  return n.x * omega.x + n.y * omega.y <= margin;
}

// -------------------------------------------------------------- sources

SimulatedSource::SimulatedSource(Nonlinearity F, SpaceTimeGrid grid, SimulationOptions options)
    : F_(std::move(F)), grid_(std::move(grid)), opt_(std::move(options)) {
  if (opt_.partial && opt_.background != Background::constant)
    throw Error(ErrorKind::config, "partial-data measurements use the constant background");
  if (!(opt_.chi_ramp > 0.0)) throw Error(ErrorKind::config, "chi ramp must be positive");
  if (opt_.noise_level < 0.0) throw Error(ErrorKind::config, "noise level must be non-negative");
}

std::shared_ptr<const Potential> SimulatedSource::background(double lambda) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(lambda); it != cache_.end()) return it->second;
  }
  if (!opt_.admissible.empty() && std::abs(lambda) > opt_.admissible.back())
    throw Error(ErrorKind::range, "background level outside the admissible range",
                {{"lambda", lambda}, {"limit", opt_.admissible.back()}});
  DirichletData G;
  if (opt_.background == Background::constant) {
    G = DirichletData::constant(lambda);
  } else {
    const double ramp = opt_.chi_ramp;
    G.f = [lambda, ramp](double t, Point) { return lambda * smooth_step(t / ramp); };
    G.u0 = [](Point) { return 0.0; };
    G.u1 = [](Point) { return 0.0; };
  }
  std::shared_ptr<const Potential> q;
  try {
    q = std::make_shared<const Potential>(effective_potential(F_, solve_semilinear(F_, G, grid_)));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::blowup) throw;
    throw Error(ErrorKind::range, "background solution blows up before T",
                {{"lambda", lambda}, {"blowup_time", e.detail("blowup_time", 0.0)}});
  }
  std::lock_guard lock(mutex_);
  return cache_.emplace(lambda, q).first->second;
}

void SimulatedSource::add_noise(BoundaryTrace& trace, std::uint64_t salt) const {
  if (opt_.noise_level == 0.0 || trace.values.empty()) return;
  double ms = 0.0;
  for (const Complex& v : trace.values) ms += std::norm(v);
  const double sigma = opt_.noise_level * std::sqrt(ms / static_cast<double>(trace.values.size()));
  std::mt19937_64 rng(opt_.seed ^ salt);
  std::normal_distribution<double> nd(0.0, sigma / std::sqrt(2.0));
  for (Complex& v : trace.values) {
    const double a = nd(rng);
    const double b = nd(rng);
    v += Complex(a, b);
  }
}

BoundaryTrace SimulatedSource::apply_probe(double lambda, const ProbeWindow& window,
                                           const ProbeSpec& spec) const {
  if (opt_.partial) throw Error(ErrorKind::config, "partial-data source only answers apply()");
  BoundaryTrace tr = probe_trace(window, spec, *background(lambda));
  std::uint64_t salt = 0x9e3779b97f4a7c15ull;
  for (double v : {lambda, spec.rho, spec.t0, spec.s0, spec.delta, static_cast<double>(spec.face)})
    salt = mix(salt, v);
  add_noise(tr, salt);
  return tr;
}

void SimulatedSource::check_partial(const LinearData& input) const {
  const PartialDataFaces& pf = *opt_.partial;
  const SpatialGrid& g = grid_.space();
  const Domain& d = g.domain();
  if (input.h0)
    for (std::size_t k = 0; k < g.size(); ++k)
      if (std::abs(input.h0(g.node(k))) != 0.0)
        throw Error(ErrorKind::config, "partial-data inputs need h0 = 0");
  if (!input.h) return;
  for (const BoundaryNode& b : g.face_nodes()) {
    if (pf.in_U(d, b.face, b.s)) continue;
    const Point x = g.node(b.node);
    for (int n = 0; n < grid_.levels(); ++n)
      if (std::abs(input.h(grid_.time(n), x)) != 0.0)
        throw Error(ErrorKind::config, "partial-data input is supported off U",
                    {{"face", b.face}, {"s", b.s}, {"t", grid_.time(n)}});
  }
}

MeasurementResult SimulatedSource::apply(double lambda, const LinearData& input,
                                         const BoundaryPortion& portion) const {
  const auto q = background(lambda);
  MeasurementResult out;
  std::uint64_t salt = mix(0x51ed270b27d3c9a1ull, lambda);
  if (!opt_.partial) {
    DtnResult r = dtn_apply(*q, input, grid_, portion, DtnMode::with_final_state);
    out.trace = std::move(r.trace);
    out.final_state = std::move(r.final_w);
    add_noise(out.trace, salt);
    return out;
  }
  check_partial(input);
  const WaveField w = solve_linear(*q, input, grid_);
  const Domain& d = grid_.domain();
  BoundaryTrace all;
  all.portion = {"V", -1, 0.0, 0.0};
  all.dt = grid_.dt();
  all.levels = grid_.levels();
  std::vector<BoundaryTrace> faces;
  for (int f = 0; f < d.face_count(); ++f)
    faces.push_back(normal_derivative_trace(w, {"face", f, 0.0, d.face_length(f)}));
  for (const auto& tr : faces)
    for (const BoundaryNode& b : tr.nodes)
      if (opt_.partial->in_V(d, b.face, b.s)) all.nodes.push_back(b);
  all.values.assign(static_cast<std::size_t>(all.levels) * all.nodes.size(), Complex(0.0, 0.0));
  for (int n = 0; n < all.levels; ++n) {
    std::size_t j = 0;
    for (const auto& tr : faces)
      for (std::size_t i = 0; i < tr.width(); ++i)
        if (opt_.partial->in_V(d, tr.nodes[i].face, tr.nodes[i].s)) all.at(n, j++) = tr.at(n, i);
  }
  out.trace = std::move(all);
  std::vector<Complex> fin(grid_.space().size());
  for (std::size_t k = 0; k < fin.size(); ++k) fin[k] = w.at(grid_.steps(), k);
  out.final_state = std::move(fin);
  add_noise(out.trace, salt);
  return out;
}

namespace {
std::vector<double> injected_key(double lambda, const ProbeSpec& s) {
  return {lambda, s.rho, s.t0, static_cast<double>(s.face), s.s0, s.delta};
}
}  // namespace

void InjectedSource::insert(double lambda, const ProbeSpec& spec, BoundaryTrace trace) {
  traces_[injected_key(lambda, spec)] = std::move(trace);
}

BoundaryTrace InjectedSource::apply_probe(double lambda, const ProbeWindow&, const ProbeSpec& spec) const {
  auto it = traces_.find(injected_key(lambda, spec));
  if (it == traces_.end())
    throw Error(ErrorKind::gap, "no injected trace for this probe", {{"lambda", lambda}, {"rho", spec.rho}});
  return it->second;
}

MeasurementResult InjectedSource::apply(double, const LinearData&, const BoundaryPortion&) const {
  throw Error(ErrorKind::config, "injected sources only replay probe traces");
}

std::unique_ptr<MeasurementSource> simulate_measurements(const Nonlinearity& F_true, const SpaceTimeGrid& grid,
                                                         const SimulationOptions& options) {
  return std::make_unique<SimulatedSource>(F_true, grid, options);
}

// -------------------------------------------------------------- pipelines

std::vector<double> default_rho_ladder(double delta) {
  return {10.0 / delta, 20.0 / delta, 40.0 / delta};
}

void RecoveryConfig::validate(const Domain& domain, double T) const {
  if (lambda_grid.empty()) throw Error(ErrorKind::config, "empty lambda grid");
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()) ||
      std::adjacent_find(lambda_grid.begin(), lambda_grid.end()) != lambda_grid.end())
    throw Error(ErrorKind::config, "lambda grid must be strictly increasing");
  if (std::find(lambda_grid.begin(), lambda_grid.end(), 0.0) == lambda_grid.end())
    throw Error(ErrorKind::config, "lambda grid must contain 0");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i)
    if (std::abs(lambda_grid[i] + lambda_grid[lambda_grid.size() - 1 - i]) > 1e-12 * (1.0 + std::abs(lambda_grid[i])))
      throw Error(ErrorKind::config, "lambda grid must be symmetric about 0");
  if (!(delta > 0.0)) throw Error(ErrorKind::config, "delta must be positive");
  if (rho_ladder.empty()) throw Error(ErrorKind::config, "empty rho ladder");
  if (probe_points.empty()) throw Error(ErrorKind::config, "no probe points");
  for (const ProbePoint& p : probe_points) {
    if (!(p.t0 > delta && p.t0 < T - delta))
      throw Error(ErrorKind::config, "probe time outside (delta, T - delta)", {{"t0", p.t0}});
    for (double rho : rho_ladder) {
      ProbeSpec s{p.t0, p.face, p.s0, delta, rho, plateau, 0.0, ""};
      validate_probe(domain, s, T);
    }
  }
}

LateralRecovery recover_duF_lateral(const MeasurementSource& source, const RecoveryConfig& config,
                                    const Domain& domain, double T) {
  config.validate(domain, T);
  LateralRecovery out;
  out.points = config.probe_points;
  out.lambdas = config.lambda_grid;
  for (const ProbePoint& p : out.points) out.positions.push_back(domain.boundary_point(p.face, p.s0));
  const std::size_t np = out.points.size(), nl = out.lambdas.size(), nr = config.rho_ladder.size();

  auto spec_of = [&](std::size_t i, std::size_t r) {
    const ProbePoint& p = out.points[i];
    return ProbeSpec{p.t0, p.face, p.s0, config.delta, config.rho_ladder[r], config.plateau, 0.0, ""};
  };
  // Windows and q = 0 reference traces do not depend on lambda.
  std::vector<std::optional<ProbeWindow>> windows(np * nr);
  std::vector<BoundaryTrace> reference(np * nr);
  parallel_for(np * nr, config.threads, [&](std::size_t k) {
    const ProbeSpec s = spec_of(k / nr, k % nr);
    windows[k] = make_probe_window(domain, s, config.points_per_wavelength);
    reference[k] = probe_trace_free(*windows[k], s);
  });

  out.estimates.assign(np, std::vector<PointEstimate>(nl));
  parallel_for(np * nl, config.threads, [&](std::size_t k) {
    const std::size_t i = k / nl, l = k % nl;
    std::vector<ProbeMeasurement> ladder;
    for (std::size_t r = 0; r < nr; ++r) {
      const ProbeSpec s = spec_of(i, r);
      const ProbeWindow& w = *windows[i * nr + r];
      ladder.push_back({s, w, source.apply_probe(out.lambdas[l], w, s), reference[i * nr + r]});
    }
    out.estimates[i][l] = recover_q_difference_point(ladder);
  });
  return out;
}

std::vector<std::vector<double>> assemble_F(const std::vector<std::vector<double>>& samples,
                                            const std::vector<double>& lambdas,
                                            const std::vector<double>& anchor) {
  if (anchor.size() != samples.size())
    throw Error(ErrorKind::shape, "one anchor value per point is required");
  const auto zero = std::find(lambdas.begin(), lambdas.end(), 0.0);
  if (zero == lambdas.end()) throw Error(ErrorKind::gap, "lambda grid lacks 0");
  if (!std::is_sorted(lambdas.begin(), lambdas.end()))
    throw Error(ErrorKind::config, "lambda grid must be increasing");
  const std::size_t z = static_cast<std::size_t>(zero - lambdas.begin());
  std::vector<std::vector<double>> F(samples.size());
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const auto& s = samples[p];
    if (s.size() != lambdas.size())
      throw Error(ErrorKind::gap, "missing lambda samples", {{"point", static_cast<double>(p)}});
    for (std::size_t l = 0; l < s.size(); ++l)
      if (!std::isfinite(s[l]))
        throw Error(ErrorKind::gap, "missing lambda sample",
                    {{"point", static_cast<double>(p)}, {"lambda", lambdas[l]}});
    auto& f = F[p];
    f.assign(lambdas.size(), anchor[p]);
    for (std::size_t l = z + 1; l < lambdas.size(); ++l)
      f[l] = f[l - 1] + 0.5 * (lambdas[l] - lambdas[l - 1]) * (s[l] + s[l - 1]);
    for (std::size_t l = z; l-- > 0;) f[l] = f[l + 1] - 0.5 * (lambdas[l + 1] - lambdas[l]) * (s[l] + s[l + 1]);
  }
  return F;
}

InitialRecovery recover_F_initial_interior(const Nonlinearity& F, const std::vector<double>& lambdas,
                                           const SpaceTimeGrid& grid, const std::vector<double>& anchor,
                                           const InteriorOracle& oracle) {
  const SpatialGrid& g = grid.space();
  const std::size_t N = g.size();
  if (anchor.size() != N) throw Error(ErrorKind::shape, "anchor needs one value per node");
  InitialRecovery out;
  out.lambdas = lambdas;
  out.oracle_mode = static_cast<bool>(oracle);
  for (double lambda : lambdas) {
    WaveField u(grid, false);
    try {
      u = solve_semilinear(F, DirichletData::constant(lambda), grid);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::blowup) throw;
      throw Error(ErrorKind::range, "constant data blow up before T",
                  {{"lambda", lambda}, {"blowup_time", e.detail("blowup_time", 0.0)}});
    }
    const Potential q = effective_potential(F, u);
    const auto lev = q.level(0);
    out.duF.emplace_back(lev.begin(), lev.end());
    if (oracle) out.interior.push_back(oracle(lambda));
  }
  // Per node integration in lambda.
  std::vector<std::vector<double>> per_node(N, std::vector<double>(lambdas.size()));
  for (std::size_t l = 0; l < lambdas.size(); ++l)
    for (std::size_t k = 0; k < N; ++k) per_node[k][l] = out.duF[l][k];
  const auto Fn = assemble_F(per_node, lambdas, anchor);
  out.F.assign(lambdas.size(), std::vector<double>(N));
  for (std::size_t l = 0; l < lambdas.size(); ++l)
    for (std::size_t k = 0; k < N; ++k) out.F[l][k] = Fn[k][l];
  return out;
}

}  // namespace wavenl
