#include "wavenl/linearization.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "wavenl/error.hpp"

namespace wavenl {

Potential effective_potential(const Nonlinearity& F, const WaveField& u) {
  if (!u.is_real()) throw Error(ErrorKind::shape, "effective potential needs a real field");
  const SpaceTimeGrid& grid = u.grid();
  const SpatialGrid& g = grid.space();
  std::vector<double> q(u.real_values().size());
  for (int n = 0; n < grid.levels(); ++n) {
    const double t = grid.time(n);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.node(k);
      const double v = F.d_u(t, x, u.real_at(n, k));
      if (!std::isfinite(v))
        throw Error(ErrorKind::evaluation, "dF/du is not finite",
                    {{"t", t}, {"x", x.x}, {"y", x.y}, {"u", u.real_at(n, k)}});
      q[static_cast<std::size_t>(n) * g.size() + k] = v;
    }
  }
  return Potential(grid, std::move(q));
}

Measurement measure_nonlinear(const Nonlinearity& F, const DirichletData& G,
                              const SpaceTimeGrid& grid, const BoundaryPortion& portion) {
  const WaveField u = solve_semilinear(F, G, grid);
  Measurement m{normal_derivative_trace(u, portion), {}};
  const auto last = u.real_level(grid.steps());
  m.final_state.assign(last.begin(), last.end());
  return m;
}

DtnResult frechet_apply(const Nonlinearity& F, const DirichletData& G, const DirichletData& H,
                        const SpaceTimeGrid& grid, const BoundaryPortion& portion) {
  const Potential q = effective_potential(F, solve_semilinear(F, G, grid));
  return dtn_apply(q, LinearData::from_real(H), grid, portion, DtnMode::with_final_state);
}

double measurement_norm(const BoundaryTrace& trace, std::span<const Complex> final_state,
                        const SpatialGrid& space) {
  return trace.l2_norm() + h1_norm(space, final_state);
}

namespace {

// |(a - b)/div - c| in the measurement norm.
double combo_norm(const Measurement& a, const Measurement& b, double div, const DtnResult& c,
                  double c_scale, const SpatialGrid& g) {
  BoundaryTrace tr = a.trace;
  for (std::size_t i = 0; i < tr.values.size(); ++i)
    tr.values[i] = (a.trace.values[i] - b.trace.values[i]) / div - c_scale * c.trace.values[i];
  std::vector<Complex> fs(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    fs[k] = (a.final_state[k] - b.final_state[k]) / div - c_scale * (*c.final_w)[k];
  return measurement_norm(tr, fs, g);
}

}  // namespace

RemainderReport frechet_remainder_check(const Nonlinearity& F, const DirichletData& G,
                                        const DirichletData& H, const SpaceTimeGrid& grid,
                                        const BoundaryPortion& portion,
                                        const std::vector<double>& scales, int threads) {
  if (scales.size() < 3) throw Error(ErrorKind::config, "remainder check needs at least three scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw Error(ErrorKind::config, "scales must be positive");
    if (i > 0 && !(scales[i] < scales[i - 1]))
      throw Error(ErrorKind::config, "scales must be strictly descending");
  }
  const SpatialGrid& g = grid.space();
  const Measurement base = measure_nonlinear(F, G, grid, portion);
  const DtnResult lin = frechet_apply(F, G, H, grid, portion);

  std::vector<Measurement> shifted(scales.size());
  std::vector<std::exception_ptr> failures(scales.size());
  parallel_for(scales.size(), threads, [&](std::size_t i) {
    try {
      shifted[i] = measure_nonlinear(F, G.plus(H, scales[i]), grid, portion);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      auto details = e.details();
      details["scale"] = scales[i];
      throw Error(e.kind(), e.what(), details);
    }
  }

  RemainderReport rep;
  rep.scales = scales;
  double lin_norm = 0.0;
  {
    std::vector<Complex> fs(lin.final_w->begin(), lin.final_w->end());
    lin_norm = measurement_norm(lin.trace, fs, g);
  }
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double s = scales[i];
    rep.remainders.push_back(combo_norm(shifted[i], base, 1.0, lin, s, g));
    rep.identity_residuals.push_back(combo_norm(shifted[i], base, s, lin, 1.0, g));
  }
  // Roundoff floor: relative 1e-10 of the linear response at each scale.
  rep.degenerate = true;
  for (std::size_t i = 0; i < scales.size(); ++i)
    if (rep.remainders[i] > 1e-10 * scales[i] * std::max(lin_norm, 1e-300)) rep.degenerate = false;
  if (!rep.degenerate) {
    rep.fitted_order = loglog_slope(rep.scales, rep.remainders);
    rep.identity_slope = loglog_slope(rep.scales, rep.identity_residuals);
  }
  return rep;
}

void RemainderReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "scale,remainder,identity_residual\n" << std::setprecision(17);
  for (std::size_t i = 0; i < scales.size(); ++i)
    out << scales[i] << ',' << remainders[i] << ',' << identity_residuals[i] << '\n';
}

}  // namespace wavenl
