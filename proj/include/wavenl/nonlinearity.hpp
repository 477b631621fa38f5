#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavenl/geometry.hpp"
#include "wavenl/numerics.hpp"

namespace wavenl {

using NonlinearFn = std::function<double(double t, Point x, double u)>;
using SpaceTimeFn = std::function<double(double t, Point x)>;

enum class ClassTag { A, A_star, unconstrained };
const char* to_string(ClassTag tag);

// F(t, x, u) with optional analytic partials. Missing partials fall back to
// five-point differences with step 1e-5 * max(1, |arg|).
struct Nonlinearity {
  std::string name;
  NonlinearFn eval;
  NonlinearFn du;
  NonlinearFn duu;
  NonlinearFn dt;
  double growth_b = 2.0;
  double growth_c1 = 1.0;
  ClassTag class_tag = ClassTag::unconstrained;

  double value(double t, Point x, double u) const { return eval(t, x, u); }
  double d_u(double t, Point x, double u) const;
  double d_uu(double t, Point x, double u) const;
  double d_t(double t, Point x, double u) const;
  double d_uuu(double t, Point x, double u) const;
};

// Central five-point derivative of g at a with step 1e-5 * max(1, |a|).
double five_point(const std::function<double(double)>& g, double a);

namespace catalog {
Nonlinearity zero();
Nonlinearity linear(SpaceTimeFn m, double bound = 10.0);
Nonlinearity quadratic(SpaceTimeFn alpha, double bound = 10.0);
Nonlinearity cubic();
Nonlinearity blowup_quadratic();
// Piecewise polynomial in u times a space-time modulation. Segment i covers
// [breaks[i], breaks[i+1]) (first and last extend to infinity) and holds
// coefficients of powers of (u - breaks[i]).
Nonlinearity table(std::vector<double> breaks, std::vector<std::vector<double>> segments,
                   SpaceTimeFn modulation, double growth_b, double growth_c1);
}  // namespace catalog

struct ClassReport {
  bool growth_ok = false;
  bool classA_ok = false;
  bool classAstar_ok = false;
  double worst_ratio = 0.0;
  double worst_t = 0.0, worst_u = 0.0;
  Point worst_x{};
  int worst_order = 0;
};

ClassReport validate_class(const Nonlinearity& F, const Domain& domain, double T_prime,
                           std::array<double, 2> u_range, int samples, std::uint64_t seed = 7,
                           double tol = 1e-10);

using BoundaryFn = std::function<double(double t, Point x)>;

// (f, u0, u1). f is evaluated at boundary points for t in [0, T'].
struct DirichletData {
  BoundaryFn f;
  SpatialFn u0;
  SpatialFn u1;

  static DirichletData zero();
  static DirichletData constant(double lambda);
  DirichletData scaled(double s) const;
  DirichletData plus(const DirichletData& other, double s = 1.0) const;
};

struct DataReport {
  std::array<double, 5> comp1{};
  std::array<double, 5> comp2{};
  double norm_low = 0.0;
  double norm_high = 0.0;
  bool star_flag = false;
  bool comp1_ok = false;
  double tolerance = 0.0;
  // Threshold for condition k (0-based); identities built from higher
  // derivatives carry more finite-difference error.
  double threshold(int k) const;
  // Index of the first failing compatibility condition, or -1.
  int first_failure() const;
};

// Compatibility residuals at t = 0 and discrete trace norms over the grid's
// horizon [0, T'].
DataReport validate_data(const DirichletData& data, const SpaceTimeGrid& grid,
                         double rel_tol = 1e-6);

struct ExistenceOptions {
  std::vector<DirichletData> battery;  // empty: built-in battery scaled to L
  double norm_cap = 0.0;               // <= 0: 10 L
  double p = 0.0;                      // <= 0: n = 2 rule from growth_b
  int max_iters = 60;
  double tol = 1e-10;
};

struct ExistenceEstimate {
  double T1 = 0.0;
  bool warning = false;
  std::string note;
};

// Largest horizon (on the grid's dt lattice) for which Picard converges and
// the tracked norms stay below norm_cap for every battery datum.
ExistenceEstimate estimate_existence_time(const Nonlinearity& F, double L,
                                          const SpaceTimeGrid& grid,
                                          const ExistenceOptions& options = {});

// Default exponent for the L^p(L^{2p}) norm: p > max(b, 3(b - 1)).
double default_lp_exponent(double growth_b);

}  // namespace wavenl
