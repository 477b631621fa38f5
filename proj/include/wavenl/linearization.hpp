#pragma once

#include <filesystem>
#include <vector>

#include "wavenl/forward.hpp"
#include "wavenl/linear.hpp"

namespace wavenl {

// q(t, x) = dF/du(t, x, u(t, x)) at every grid sample.
Potential effective_potential(const Nonlinearity& F, const WaveField& u);

// Boundary measurement of the nonlinear problem: outward normal derivative on
// the portion plus the final state u(T, .).
struct Measurement {
  BoundaryTrace trace;
  std::vector<double> final_state;
};

Measurement measure_nonlinear(const Nonlinearity& F, const DirichletData& G,
                              const SpaceTimeGrid& grid, const BoundaryPortion& portion);

// Linearized measurement at G applied to H: DtN of the effective potential
// q_{F,G} with final state.
DtnResult frechet_apply(const Nonlinearity& F, const DirichletData& G, const DirichletData& H,
                        const SpaceTimeGrid& grid, const BoundaryPortion& portion);

// Trace L2 norm plus discrete H1 norm of the final state.
double measurement_norm(const BoundaryTrace& trace, std::span<const Complex> final_state,
                        const SpatialGrid& space);

struct RemainderReport {
  std::vector<double> scales;
  std::vector<double> remainders;          // |B(G+sH) - B(G) - s D H|
  std::vector<double> identity_residuals;  // |(B(G+sH) - B(G))/s - D H|
  double fitted_order = 0.0;               // log-log slope of remainders
  double identity_slope = 0.0;             // log-log slope of identity residuals
  bool degenerate = false;                 // remainders at roundoff level

  void write_csv(const std::filesystem::path& path) const;
};

// Scales must be strictly descending with at least three entries. Nonlinear
// solves run in parallel over scales.
RemainderReport frechet_remainder_check(const Nonlinearity& F, const DirichletData& G,
                                        const DirichletData& H, const SpaceTimeGrid& grid,
                                        const BoundaryPortion& portion,
                                        const std::vector<double>& scales, int threads = 1);

}  // namespace wavenl
