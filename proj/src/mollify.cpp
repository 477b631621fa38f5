#include <cmath>

#include "tensor.hpp"
#include "wavenl/error.hpp"
#include "wavenl/probe.hpp"

namespace wavenl {

double mollifier_width(double rho, int n) {
  if (!(rho > 0.0)) throw Error(ErrorKind::config, "rho must be positive");
  return std::pow(rho, -1.0 / (n + 2));
}

namespace detail {

// Per-axis radii of the product kernel; the product support fits the unit
// ball of radius w.
std::array<double, 3> kernel_radii(const Domain& d, double w) {
  const int n = d.dimension();
  const double r = w / std::sqrt(static_cast<double>(n + 1));
  const double rb = d.kind() == DomainKind::disk ? r / d.radius() : r;
  return {r, r, rb};
}

void check_mollifier_resolution(const SpaceTimeGrid& grid, double w) {
  const int n = grid.domain().dimension();
  const double h = std::max(grid.dt(), grid.space().max_spacing());
  if (w < 2.0 * h)
    throw Error(ErrorKind::resolution, "mollifier width below twice the grid spacing",
                {{"width", w}, {"spacing", h}, {"max_rho", std::pow(2.0 * h, -(n + 2.0))}});
}

std::array<int, 3> mollifier_pads(const Tensor3& shape, std::array<double, 3> radius,
                                  std::array<double, 3> excess) {
  std::array<int, 3> pads{};
  for (int d = 0; d < 3; ++d)
    pads[d] = static_cast<int>(std::ceil((radius[d] + excess[d]) / shape.ax[d].h)) + 3;
  return pads;
}

}  // namespace detail

Potential mollify_potential(const Potential& q, double rho) {
  const SpaceTimeGrid& grid = q.grid();
  const Domain& d = grid.domain();
  const double w = mollifier_width(rho, d.dimension());
  detail::check_mollifier_resolution(grid, w);
  const auto radius = detail::kernel_radii(d, w);
  const auto coords = detail::grid_coordinates(q);
  const auto bare = detail::potential_tensor(q, {0, 0, 0});
  const auto T = detail::potential_tensor(q, detail::mollifier_pads(bare, radius, {0.0, 0.0, 0.0}));
  const auto out = detail::convolve(T, radius, coords);
  return Potential(grid, detail::to_grid_layout(grid, out));
}

}  // namespace wavenl
