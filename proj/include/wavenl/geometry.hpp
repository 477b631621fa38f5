#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wavenl {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class DomainKind { interval, rectangle, disk };

const char* to_string(DomainKind kind);

// A named open piece of one boundary face, given as a parameter range.
// Interval faces are points; the range is ignored there.
struct BoundaryPortion {
  std::string name;
  int face = 0;
  double lo = 0.0;
  double hi = 0.0;
};

// Position relative to one boundary face: tangential parameter and depth.
struct FaceCoords {
  int face = 0;
  double s = 0.0;
  double depth = 0.0;
};

// Faces:
//   interval  0: x = 0, 1: x = length
//   rectangle 0: bottom (s = x), 1: right (s = y), 2: top (s = x), 3: left (s = y)
//   disk      0: circle, s = arc length r0 * theta, theta in [0, 2 pi)
class Domain {
 public:
  static Domain interval(double length, double collar = 0.0);
  static Domain rectangle(double lx, double ly, double collar = 0.0);
  static Domain disk(double radius, double collar = 0.0);

  Domain& add_portion(BoundaryPortion portion);

  DomainKind kind() const { return kind_; }
  int dimension() const { return kind_ == DomainKind::interval ? 1 : 2; }
  double extent(int axis) const { return extents_[static_cast<std::size_t>(axis)]; }
  double radius() const { return extents_[0]; }
  double collar_width() const { return collar_; }
  double injectivity_threshold() const;

  int face_count() const;
  double face_length(int face) const;
  bool periodic_face() const { return kind_ == DomainKind::disk; }

  const std::vector<BoundaryPortion>& portions() const { return portions_; }
  const BoundaryPortion& portion(std::string_view name) const;
  bool in_portion(const BoundaryPortion& portion, int face, double s) const;
  // Signed tangential offset of s from s0 on a face (wraps on the disk).
  double tangential_offset(int face, double s, double s0) const;

  bool contains(Point p, double tol = 1e-12) const;
  double boundary_distance(Point p) const;
  FaceCoords normal_coords(Point p) const;
  FaceCoords face_coords(int face, Point p) const;
  Point exp_boundary(int face, double s, double depth) const;
  Point boundary_point(int face, double s) const { return exp_boundary(face, s, 0.0); }
  Point outward_normal(int face, double s) const;
  double beta(int face, double s, double depth) const;
  // Laplacian of the distance function at depth x_n.
  double laplacian_of_distance(double depth) const;

 private:
  Domain(DomainKind kind, std::array<double, 2> extents, double collar);

  DomainKind kind_;
  std::array<double, 2> extents_;
  double collar_;
  std::vector<BoundaryPortion> portions_;
};

struct BoundaryNode {
  std::size_t node = 0;
  int face = 0;
  double s = 0.0;
  std::size_t inward1 = 0;  // neighbor at distance h along the inward normal
  std::size_t inward2 = 0;  // neighbor at distance 2h
  double h = 0.0;
};

// Index box of active interior nodes on a Cartesian grid (inclusive).
struct ActiveBox {
  int i0 = 0, i1 = -1, j0 = 0, j1 = -1;
  bool empty() const { return i1 < i0 || j1 < j0; }
};

class SpatialGrid {
 public:
  // interval: cells = {nx}; rectangle: {nx, ny}; disk: {nr, ntheta}.
  SpatialGrid(const Domain& domain, std::array<int, 2> cells);

  const Domain& domain() const { return domain_; }
  std::array<int, 2> cells() const { return cells_; }
  std::size_t size() const { return size_; }
  Point node(std::size_t k) const;
  std::array<double, 2> spacing() const { return spacing_; }
  double min_spacing() const;
  double max_spacing() const;
  bool cartesian() const { return domain_.kind() != DomainKind::disk; }
  std::size_t index(int i, int j) const;

  bool is_boundary(std::size_t k) const { return boundary_mask_[k] != 0; }
  const std::vector<std::size_t>& boundary_indices() const { return boundary_indices_; }
  const std::vector<BoundaryNode>& face_nodes() const { return face_nodes_; }
  std::vector<BoundaryNode> portion_nodes(const BoundaryPortion& portion) const;

  std::span<const double> weights() const { return weights_; }

  // Interior Laplacian; boundary entries of `out` are set to zero.
  void laplacian(std::span<const double> u, std::span<double> out) const;
  // next = 2 cur - prev + dt2 (lap cur - q cur + src) on interior nodes inside
  // the box (Cartesian) or everywhere (disk). Null q / src mean zero.
  void leapfrog_update(const double* prev, const double* cur, double* next,
                       const double* q, const double* src, double dt2,
                       const ActiveBox& box) const;
  ActiveBox full_box() const;
  ActiveBox node_box(std::size_t k) const;

  double integrate(std::span<const double> f) const;
  double l2_norm_sq(std::span<const double> u) const;
  double gradient_norm_sq(std::span<const double> u) const;
  double interpolate(std::span<const double> u, Point p) const;
  // Outward normal derivative, one-sided three-point stencil.
  double outward_derivative(std::span<const double> u, const BoundaryNode& b) const;

 private:
  Domain domain_;
  std::array<int, 2> cells_;
  std::array<double, 2> spacing_{};
  std::size_t size_ = 0;
  std::vector<char> boundary_mask_;
  std::vector<std::size_t> boundary_indices_;
  std::vector<BoundaryNode> face_nodes_;
  std::vector<double> weights_;
};

class SpaceTimeGrid {
 public:
  SpaceTimeGrid(SpatialGrid space, int steps, double T, double T_prime = 0.0,
                double cfl_factor = 0.5);
  // Smallest step count that satisfies the CFL bound.
  static SpaceTimeGrid with_cfl(SpatialGrid space, double T, double cfl_factor = 0.5,
                                double T_prime = 0.0);

  const SpatialGrid& space() const { return space_; }
  const Domain& domain() const { return space_.domain(); }
  int steps() const { return steps_; }
  int levels() const { return steps_ + 1; }
  double T() const { return T_; }
  double T_prime() const { return T_prime_; }
  double dt() const { return T_ / steps_; }
  double time(int n) const { return n * dt(); }
  double cfl_factor() const { return cfl_; }
  bool same_shape(const SpaceTimeGrid& other) const;

 private:
  SpatialGrid space_;
  int steps_;
  double T_;
  double T_prime_;
  double cfl_;
};

}  // namespace wavenl
