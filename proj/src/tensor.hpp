#pragma once

#include <array>
#include <span>
#include <vector>

#include "wavenl/linear.hpp"

namespace wavenl::detail {

// How an axis continues past its sample range.
//   extrapolate: cubic through the four samples nearest the end
//   periodic:    angle axis
//   polar:       radius axis, negative radii read the antipodal angle column
enum class Ext { extrapolate, periodic, polar };

struct Axis {
  int n = 1;            // samples inside the range
  double origin = 0.0;  // coordinate of sample 0
  double h = 1.0;
  Ext ext = Ext::extrapolate;
  int pad = 0;          // extra samples on each side after padding
};

// Samples of a potential on (t, a, b). Cartesian: a = y, b = x (interval has
// a = x and a single b sample). Disk: a = r (center replicated), b = theta.
struct Tensor3 {
  std::array<Axis, 3> ax;
  std::vector<double> v;  // padded, row-major (t, a, b)

  int size(int d) const { return ax[d].n + 2 * ax[d].pad; }
  double& at(int i, int j, int k) {
    return v[(static_cast<std::size_t>(i) * size(1) + j) * size(2) + k];
  }
  double at(int i, int j, int k) const {
    return v[(static_cast<std::size_t>(i) * size(1) + j) * size(2) + k];
  }
  // Continuous index of coordinate x on axis d, in padded numbering.
  double index_of(int d, double x) const;
};

// Builds the tensor with `pads` extra samples per axis, filled by the axis
// extensions in order t, a, b.
Tensor3 potential_tensor(const Potential& q, std::array<int, 3> pads);

// Separable bump convolution, radius r[d] per axis (in axis units), evaluated
// on the product of the output coordinates. Weights are renormalized so
// constants are reproduced exactly.
std::vector<double> convolve(const Tensor3& T, std::array<double, 3> radius,
                             const std::array<std::vector<double>, 3>& out);

// Tensor Catmull-Rom interpolation at the product of output coordinates.
std::vector<double> cubic_sample(const Tensor3& T, const std::array<std::vector<double>, 3>& out);

// Grid coordinates of a potential's own samples per axis.
std::array<std::vector<double>, 3> grid_coordinates(const Potential& q);

// Converts a (t, a, b) product back to grid levels x nodes (disk: center is
// the mean of the r = 0 row).
std::vector<double> to_grid_layout(const SpaceTimeGrid& grid, std::span<const double> tensor);

}  // namespace wavenl::detail

namespace wavenl::detail {

std::array<double, 3> kernel_radii(const Domain& d, double w);
void check_mollifier_resolution(const SpaceTimeGrid& grid, double w);
// Padding per axis so a kernel of the given radius can be evaluated up to
// `excess` beyond the sample range.
std::array<int, 3> mollifier_pads(const Tensor3& shape, std::array<double, 3> radius,
                                  std::array<double, 3> excess);

}  // namespace wavenl::detail
