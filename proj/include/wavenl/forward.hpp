#pragma once

#include <memory>
#include <span>
#include <vector>

#include "wavenl/field.hpp"
#include "wavenl/nonlinearity.hpp"

namespace wavenl {

enum class LiftOrder {
  full,         // all five initial traces (requires every compatibility condition)
  first_order,  // G = E[f] only; f(0) = u0 and f_t(0) = u1 are required
};

// full: G = B(t) P(t, x) + E[f - B P] where P is the Taylor polynomial built
// from (u0, u1, lap u0, lap u1, lap^2 u0), B a smooth cutoff equal to 1 on
// [0, T'/2], and E the discrete harmonic extension of boundary values.
class Lifting {
 public:
  Lifting(const DirichletData& data, const SpaceTimeGrid& grid, LiftOrder order);
  ~Lifting();
  Lifting(Lifting&&) noexcept;

  const SpaceTimeGrid& grid() const;
  void values(double t, std::span<double> out) const;
  void time_derivative(double t, std::span<double> out) const;
  // Discrete wave operator of G at interior nodes with exact time derivatives;
  // boundary entries are zero.
  void wave_operator(double t, std::span<double> out) const;
  WaveField field() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

WaveField lift_data(const DirichletData& data, const SpaceTimeGrid& grid);

struct SemilinearOptions {
  double blowup_threshold = 1e6;
};

WaveField solve_semilinear(const Nonlinearity& F, const DirichletData& data,
                           const SpaceTimeGrid& grid, const SemilinearOptions& options = {});

struct PicardOptions {
  int max_iters = 60;
  double tol = 1e-12;
};

struct PicardResult {
  WaveField u;
  int iterations = 0;
  double contraction_ratio = 0.0;
  double tail_norm = 0.0;              // relative source energy beyond the kept modes
  double first_correction_sup = 0.0;   // sup of the first nonlinear correction
};

PicardResult picard_duhamel_solve(const Nonlinearity& F, const DirichletData& data,
                                  const SpaceTimeGrid& grid, const PicardOptions& options = {});

struct EnergyNorms {
  double c_h1 = 0.0;
  double lp_l2p = 0.0;
  double c1_l2 = 0.0;
};

EnergyNorms energy_norms(const WaveField& u, double p);

}  // namespace wavenl
