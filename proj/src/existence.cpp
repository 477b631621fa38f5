#include <cmath>
#include <numbers>

#include "wavenl/error.hpp"
#include "wavenl/forward.hpp"

namespace wavenl {

namespace {

// Compatible probing data scaled so that norm_low equals L.
std::vector<DirichletData> default_battery(double L, const SpaceTimeGrid& grid) {
  const Domain& d = grid.domain();
  const double lx = d.extent(0);
  const bool two = d.kind() == DomainKind::rectangle;
  const double ly = two ? d.extent(1) : 1.0;
  auto mode = [=](int a, int b) {
    return [=](Point p) {
      double v = std::sin(std::numbers::pi * a * p.x / lx);
      if (two) v *= std::sin(std::numbers::pi * b * p.y / ly);
      return v;
    };
  };
  std::vector<DirichletData> raw = {
      {[](double, Point) { return 0.0; }, mode(1, 1), [](Point) { return 0.0; }},
      {[](double, Point) { return 0.0; }, [](Point) { return 0.0; }, mode(1, 1)},
      {[](double, Point) { return 0.0; }, mode(2, 1), [](Point) { return 0.0; }},
  };
  std::vector<DirichletData> out;
  for (auto& r : raw) {
    const double n = validate_data(r, grid).norm_low;
    out.push_back(r.scaled(L / n));
  }
  return out;
}

}  // namespace

ExistenceEstimate estimate_existence_time(const Nonlinearity& F, double L,
                                          const SpaceTimeGrid& grid,
                                          const ExistenceOptions& options) {
  if (!(L > 0.0)) throw Error(ErrorKind::config, "data bound L must be positive");
  const auto battery = options.battery.empty() ? default_battery(L, grid) : options.battery;
  const double cap = options.norm_cap > 0 ? options.norm_cap : 10.0 * L;
  const double p = options.p > 0 ? options.p : default_lp_exponent(F.growth_b);
  const double dt = grid.dt();
  const int max_steps = static_cast<int>(std::lround(grid.T_prime() / dt));

  auto passes = [&](int steps) {
    const SpaceTimeGrid g(grid.space(), steps, steps * dt, grid.T_prime(), grid.cfl_factor());
    for (const auto& data : battery) {
      try {
        PicardResult r = picard_duhamel_solve(F, data, g, {options.max_iters, options.tol});
        const EnergyNorms e = energy_norms(r.u, p);
        if (!(e.c_h1 + e.lp_l2p <= cap)) return false;
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::divergence || err.kind() == ErrorKind::compatibility) return false;
        throw;
      }
    }
    return true;
  };

  ExistenceEstimate est;
  if (passes(max_steps)) {
    est.T1 = grid.T_prime();
    return est;
  }
  const int min_steps = 8;
  if (!passes(min_steps)) {
    est.T1 = min_steps * dt;
    est.warning = true;
    est.note = "failure at the shortest tested horizon";
    return est;
  }
  int lo = min_steps, hi = max_steps;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (passes(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  est.T1 = lo * dt;
  return est;
}

}  // namespace wavenl
