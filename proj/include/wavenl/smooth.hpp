#pragma once

namespace wavenl {

// C-infinity step: 0 for x <= 0, 1 for x >= 1, all derivatives vanish at both ends.
double smooth_step(double x);

// Even flat-top cutoff: 1 on |s| <= plateau, 0 on |s| >= support.
double flat_top(double s, double plateau, double support);

// Compactly supported bump exp(-1/(1-r^2)) on |r| < 1 (unnormalized).
double bump(double r);

}  // namespace wavenl
