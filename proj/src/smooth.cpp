#include "wavenl/smooth.hpp"

#include <cmath>

namespace wavenl {

namespace {
double tail(double x) { return x <= 0.0 ? 0.0 : std::exp(-1.0 / x); }
}  // namespace

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = tail(x);
  const double b = tail(1.0 - x);
  return a / (a + b);
}

double flat_top(double s, double plateau, double support) {
  const double a = std::abs(s);
  if (a <= plateau) return 1.0;
  if (a >= support) return 0.0;
  return 1.0 - smooth_step((a - plateau) / (support - plateau));
}

double bump(double r) {
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r2));
}

}  // namespace wavenl
