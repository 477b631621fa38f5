#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wavenl/geometry.hpp"

namespace wavenl {

// Finite-difference weights for the m-th derivative at x0 from nodes xs
// (Fornberg's recursion).
std::vector<double> fd_weights(double x0, std::span<const double> xs, int m);

// m-th derivative of g at 0 from samples g(0), g(h), ..., fourth-order accurate.
double one_sided_derivative(const std::function<double(double)>& g, int m, double h);

// Squared discrete H^order norm of samples on a uniform tensor lattice with
// the given extents and spacings (row-major, last axis fastest). Derivatives
// are repeated forward differences; the measure is the product spacing.
double lattice_sobolev_sq(std::span<const double> v, const std::vector<int>& dims,
                          const std::vector<double>& h, int order);

using SpatialFn = std::function<double(Point)>;

// Laplacian of a callable at p with step h; one-sided in the normal direction
// when the centered stencil would leave the domain.
double callable_laplacian(const SpatialFn& fn, const Domain& domain, Point p, double h);

// Bilaplacian of a callable at p from a local polynomial fit on lattice
// points of step h that lie in the domain.
double callable_bilaplacian(const SpatialFn& fn, const Domain& domain, Point p, double h);

// Linear least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

// Splits [0, n) into contiguous chunks and runs fn(i) on up to `threads`
// worker threads. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// 64-bit FNV-1a over raw bytes; used for cache keys.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 1469598103934665603ull);

}  // namespace wavenl
