#include "wavenl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavenl/error.hpp"

namespace wavenl {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) {
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0) theta += kTwoPi;
  return theta;
}
}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::domain: return "domain";
    case ErrorKind::collar: return "collar";
    case ErrorKind::shape: return "shape";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::blowup: return "blowup";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::range: return "range";
    case ErrorKind::io: return "io";
    case ErrorKind::gap: return "gap";
    case ErrorKind::geometry: return "geometry";
  }
  return "unknown";
}

const char* to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::interval: return "interval";
    case DomainKind::rectangle: return "rectangle";
    case DomainKind::disk: return "disk";
  }
  return "unknown";
}

// ---------------------------------------------------------------- Domain

Domain::Domain(DomainKind kind, std::array<double, 2> extents, double collar)
    : kind_(kind), extents_(extents), collar_(collar) {
  const int axes = kind_ == DomainKind::rectangle ? 2 : 1;
  for (int a = 0; a < axes; ++a) {
    if (!(extents_[static_cast<std::size_t>(a)] > 0.0))
      throw Error(ErrorKind::config, "domain extents must be strictly positive");
  }
  const double limit = injectivity_threshold();
  if (collar_ <= 0.0) collar_ = 0.9 * limit;
  if (!(collar_ < limit))
    throw Error(ErrorKind::config, "collar width must be below the injectivity threshold",
                {{"collar", collar_}, {"threshold", limit}});
}

Domain Domain::interval(double length, double collar) {
  return Domain(DomainKind::interval, {length, 0.0}, collar);
}
Domain Domain::rectangle(double lx, double ly, double collar) {
  return Domain(DomainKind::rectangle, {lx, ly}, collar);
}
Domain Domain::disk(double radius, double collar) {
  return Domain(DomainKind::disk, {radius, 0.0}, collar);
}

double Domain::injectivity_threshold() const {
  switch (kind_) {
    case DomainKind::interval: return 0.5 * extents_[0];
    case DomainKind::rectangle: return 0.5 * std::min(extents_[0], extents_[1]);
    case DomainKind::disk: return extents_[0];
  }
  return 0.0;
}

int Domain::face_count() const {
  switch (kind_) {
    case DomainKind::interval: return 2;
    case DomainKind::rectangle: return 4;
    case DomainKind::disk: return 1;
  }
  return 0;
}

double Domain::face_length(int face) const {
  if (face < 0 || face >= face_count()) throw Error(ErrorKind::geometry, "no such face");
  switch (kind_) {
    case DomainKind::interval: return 0.0;
    case DomainKind::rectangle: return (face % 2 == 0) ? extents_[0] : extents_[1];
    case DomainKind::disk: return kTwoPi * extents_[0];
  }
  return 0.0;
}

Domain& Domain::add_portion(BoundaryPortion p) {
  if (p.face < 0 || p.face >= face_count())
    throw Error(ErrorKind::config, "boundary portion '" + p.name + "' names a missing face");
  if (kind_ == DomainKind::rectangle) {
    if (!(p.lo < p.hi) || p.lo < 0.0 || p.hi > face_length(p.face))
      throw Error(ErrorKind::config, "boundary portion '" + p.name + "' is empty or off its face");
  } else if (kind_ == DomainKind::disk) {
    if (!(p.lo < p.hi) || p.hi - p.lo > face_length(0))
      throw Error(ErrorKind::config, "boundary arc '" + p.name + "' is empty or overlaps itself");
  } else {
    p.lo = p.hi = 0.0;
  }
  for (const auto& q : portions_)
    if (q.name == p.name) throw Error(ErrorKind::config, "duplicate portion name '" + p.name + "'");
  portions_.push_back(std::move(p));
  return *this;
}

const BoundaryPortion& Domain::portion(std::string_view name) const {
  for (const auto& p : portions_)
    if (p.name == name) return p;
  throw Error(ErrorKind::geometry, "unknown boundary portion '" + std::string(name) + "'");
}

double Domain::tangential_offset(int face, double s, double s0) const {
  (void)face;
  double d = s - s0;
  if (kind_ == DomainKind::disk) {
    const double period = face_length(0);
    d = std::fmod(d, period);
    if (d > 0.5 * period) d -= period;
    if (d < -0.5 * period) d += period;
  }
  return d;
}

bool Domain::in_portion(const BoundaryPortion& p, int face, double s) const {
  if (face != p.face) return false;
  if (kind_ == DomainKind::interval) return true;
  const double tol = 1e-12 * std::max(1.0, face_length(face));
  if (kind_ == DomainKind::disk) {
    const double period = face_length(0);
    double rel = std::fmod(s - p.lo, period);
    if (rel < 0) rel += period;
    if (rel > period - tol) rel -= period;
    return rel >= -tol && rel <= p.hi - p.lo + tol;
  }
  return s >= p.lo - tol && s <= p.hi + tol;
}

bool Domain::contains(Point p, double tol) const {
  switch (kind_) {
    case DomainKind::interval: return p.x >= -tol && p.x <= extents_[0] + tol;
    case DomainKind::rectangle:
      return p.x >= -tol && p.x <= extents_[0] + tol && p.y >= -tol && p.y <= extents_[1] + tol;
    case DomainKind::disk: return std::hypot(p.x, p.y) <= extents_[0] + tol;
  }
  return false;
}

double Domain::boundary_distance(Point p) const {
  if (!contains(p, 1e-12 * std::max(1.0, extents_[0])))
    throw Error(ErrorKind::domain, "point lies outside the domain", {{"x", p.x}, {"y", p.y}});
  switch (kind_) {
    case DomainKind::interval: return std::max(0.0, std::min(p.x, extents_[0] - p.x));
    case DomainKind::rectangle:
      return std::max(0.0, std::min({p.x, p.y, extents_[0] - p.x, extents_[1] - p.y}));
    case DomainKind::disk: return std::max(0.0, extents_[0] - std::hypot(p.x, p.y));
  }
  return 0.0;
}

FaceCoords Domain::face_coords(int face, Point p) const {
  switch (kind_) {
    case DomainKind::interval:
      return face == 0 ? FaceCoords{0, 0.0, p.x} : FaceCoords{1, 0.0, extents_[0] - p.x};
    case DomainKind::rectangle:
      switch (face) {
        case 0: return {0, p.x, p.y};
        case 1: return {1, p.y, extents_[0] - p.x};
        case 2: return {2, p.x, extents_[1] - p.y};
        default: return {3, p.y, p.x};
      }
    case DomainKind::disk: {
      const double r = std::hypot(p.x, p.y);
      const double theta = r > 0.0 ? wrap_angle(std::atan2(p.y, p.x)) : 0.0;
      return {0, extents_[0] * theta, extents_[0] - r};
    }
  }
  return {};
}

FaceCoords Domain::normal_coords(Point p) const {
  const double d = boundary_distance(p);
  if (!(d < collar_))
    throw Error(ErrorKind::collar, "point lies outside the boundary collar",
                {{"distance", d}, {"collar", collar_}});
  FaceCoords best = face_coords(0, p);
  for (int f = 1; f < face_count(); ++f) {
    FaceCoords c = face_coords(f, p);
    if (c.depth < best.depth) best = c;
  }
  best.depth = std::max(0.0, best.depth);
  return best;
}

Point Domain::exp_boundary(int face, double s, double depth) const {
  switch (kind_) {
    case DomainKind::interval: return face == 0 ? Point{depth, 0.0} : Point{extents_[0] - depth, 0.0};
    case DomainKind::rectangle:
      switch (face) {
        case 0: return {s, depth};
        case 1: return {extents_[0] - depth, s};
        case 2: return {s, extents_[1] - depth};
        default: return {depth, s};
      }
    case DomainKind::disk: {
      const double theta = s / extents_[0];
      const double r = extents_[0] - depth;
      return {r * std::cos(theta), r * std::sin(theta)};
    }
  }
  return {};
}

Point Domain::outward_normal(int face, double s) const {
  switch (kind_) {
    case DomainKind::interval: return face == 0 ? Point{-1.0, 0.0} : Point{1.0, 0.0};
    case DomainKind::rectangle:
      switch (face) {
        case 0: return {0.0, -1.0};
        case 1: return {1.0, 0.0};
        case 2: return {0.0, 1.0};
        default: return {-1.0, 0.0};
      }
    case DomainKind::disk: {
      const double theta = s / extents_[0];
      return {std::cos(theta), std::sin(theta)};
    }
  }
  return {};
}

double Domain::beta(int face, double s, double depth) const {
  (void)face;
  (void)s;
  if (depth < 0.0 || !(depth < collar_))
    throw Error(ErrorKind::collar, "depth outside the boundary collar",
                {{"depth", depth}, {"collar", collar_}});
  if (kind_ != DomainKind::disk) return 1.0;
  const double r = 1.0 - depth / extents_[0];
  return r * r;
}

double Domain::laplacian_of_distance(double depth) const {
  if (kind_ != DomainKind::disk) return 0.0;
  return -1.0 / (extents_[0] - depth);
}

// ----------------------------------------------------------- SpatialGrid

SpatialGrid::SpatialGrid(const Domain& domain, std::array<int, 2> cells)
    : domain_(domain), cells_(cells) {
  const int dim = domain_.dimension();
  if (cells_[0] < 8 || (dim == 2 && cells_[1] < 8))
    throw Error(ErrorKind::config, "grids need at least 8 cells per axis");
  switch (domain_.kind()) {
    case DomainKind::interval: {
      const int nx = cells_[0];
      cells_[1] = 0;
      spacing_ = {domain_.extent(0) / nx, 0.0};
      size_ = static_cast<std::size_t>(nx + 1);
      boundary_mask_.assign(size_, 0);
      boundary_mask_[0] = boundary_mask_[size_ - 1] = 1;
      boundary_indices_ = {0, size_ - 1};
      const double h = spacing_[0];
      face_nodes_.push_back({0, 0, 0.0, 1, 2, h});
      face_nodes_.push_back({size_ - 1, 1, 0.0, size_ - 2, size_ - 3, h});
      weights_.assign(size_, h);
      weights_.front() = weights_.back() = 0.5 * h;
      break;
    }
    case DomainKind::rectangle: {
      const int nx = cells_[0], ny = cells_[1];
      spacing_ = {domain_.extent(0) / nx, domain_.extent(1) / ny};
      size_ = static_cast<std::size_t>((nx + 1) * (ny + 1));
      boundary_mask_.assign(size_, 0);
      weights_.assign(size_, 0.0);
      for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
          const std::size_t k = index(i, j);
          const bool bx = i == 0 || i == nx, by = j == 0 || j == ny;
          if (bx || by) {
            boundary_mask_[k] = 1;
            boundary_indices_.push_back(k);
          }
          weights_[k] = spacing_[0] * spacing_[1] * (bx ? 0.5 : 1.0) * (by ? 0.5 : 1.0);
        }
      const double hx = spacing_[0], hy = spacing_[1];
      for (int i = 0; i <= nx; ++i)
        face_nodes_.push_back({index(i, 0), 0, i * hx, index(i, 1), index(i, 2), hy});
      for (int j = 0; j <= ny; ++j)
        face_nodes_.push_back({index(nx, j), 1, j * hy, index(nx - 1, j), index(nx - 2, j), hx});
      for (int i = 0; i <= nx; ++i)
        face_nodes_.push_back({index(i, ny), 2, i * hx, index(i, ny - 1), index(i, ny - 2), hy});
      for (int j = 0; j <= ny; ++j)
        face_nodes_.push_back({index(0, j), 3, j * hy, index(1, j), index(2, j), hx});
      break;
    }
    case DomainKind::disk: {
      const int nr = cells_[0], nth = cells_[1];
      const double r0 = domain_.radius();
      spacing_ = {r0 / nr, kTwoPi / nth};
      size_ = 1 + static_cast<std::size_t>(nr) * static_cast<std::size_t>(nth);
      boundary_mask_.assign(size_, 0);
      weights_.assign(size_, 0.0);
      const double dr = spacing_[0], dth = spacing_[1];
      weights_[0] = std::numbers::pi * 0.25 * dr * dr;
      for (int i = 1; i <= nr; ++i)
        for (int j = 0; j < nth; ++j) {
          const std::size_t k = index(i, j);
          const double r = i * dr;
          if (i < nr) {
            weights_[k] = r * dr * dth;
          } else {
            weights_[k] = (r - 0.25 * dr) * 0.5 * dr * dth;
            boundary_mask_[k] = 1;
            boundary_indices_.push_back(k);
            face_nodes_.push_back({k, 0, r0 * j * dth, index(nr - 1, j), index(nr - 2, j), dr});
          }
        }
      break;
    }
  }
}

std::size_t SpatialGrid::index(int i, int j) const {
  switch (domain_.kind()) {
    case DomainKind::interval: return static_cast<std::size_t>(i);
    case DomainKind::rectangle:
      return static_cast<std::size_t>(j) * static_cast<std::size_t>(cells_[0] + 1) +
             static_cast<std::size_t>(i);
    case DomainKind::disk: {
      if (i == 0) return 0;
      const int nth = cells_[1];
      const int jj = ((j % nth) + nth) % nth;
      return 1 + static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(nth) +
             static_cast<std::size_t>(jj);
    }
  }
  return 0;
}

Point SpatialGrid::node(std::size_t k) const {
  switch (domain_.kind()) {
    case DomainKind::interval: return {static_cast<double>(k) * spacing_[0], 0.0};
    case DomainKind::rectangle: {
      const std::size_t w = static_cast<std::size_t>(cells_[0] + 1);
      return {static_cast<double>(k % w) * spacing_[0], static_cast<double>(k / w) * spacing_[1]};
    }
    case DomainKind::disk: {
      if (k == 0) return {0.0, 0.0};
      const std::size_t nth = static_cast<std::size_t>(cells_[1]);
      const double r = static_cast<double>((k - 1) / nth + 1) * spacing_[0];
      const double th = static_cast<double>((k - 1) % nth) * spacing_[1];
      return {r * std::cos(th), r * std::sin(th)};
    }
  }
  return {};
}

double SpatialGrid::min_spacing() const {
  switch (domain_.kind()) {
    case DomainKind::interval: return spacing_[0];
    case DomainKind::rectangle: return std::min(spacing_[0], spacing_[1]);
    case DomainKind::disk: return std::min(spacing_[0], spacing_[0] * spacing_[1]);
  }
  return 0.0;
}

double SpatialGrid::max_spacing() const {
  switch (domain_.kind()) {
    case DomainKind::interval: return spacing_[0];
    case DomainKind::rectangle: return std::max(spacing_[0], spacing_[1]);
    case DomainKind::disk: return std::max(spacing_[0], domain_.radius() * spacing_[1]);
  }
  return 0.0;
}

std::vector<BoundaryNode> SpatialGrid::portion_nodes(const BoundaryPortion& portion) const {
  std::vector<BoundaryNode> out;
  for (const auto& b : face_nodes_)
    if (domain_.in_portion(portion, b.face, b.s)) out.push_back(b);
  if (out.empty()) throw Error(ErrorKind::geometry, "portion '" + portion.name + "' has no grid nodes");
  return out;
}

ActiveBox SpatialGrid::full_box() const {
  switch (domain_.kind()) {
    case DomainKind::interval: return {1, cells_[0] - 1, 0, 0};
    case DomainKind::rectangle: return {1, cells_[0] - 1, 1, cells_[1] - 1};
    case DomainKind::disk: return {0, 0, 0, 0};
  }
  return {};
}

ActiveBox SpatialGrid::node_box(std::size_t k) const {
  switch (domain_.kind()) {
    case DomainKind::interval: return {static_cast<int>(k), static_cast<int>(k), 0, 0};
    case DomainKind::rectangle: {
      const std::size_t w = static_cast<std::size_t>(cells_[0] + 1);
      const int i = static_cast<int>(k % w), j = static_cast<int>(k / w);
      return {i, i, j, j};
    }
    case DomainKind::disk: return {0, 0, 0, 0};
  }
  return {};
}

void SpatialGrid::leapfrog_update(const double* prev, const double* cur, double* next,
                                  const double* q, const double* src, double dt2,
                                  const ActiveBox& box) const {
  auto finish = [&](std::size_t k, double lap) {
    double rhs = lap;
    if (q) rhs -= q[k] * cur[k];
    if (src) rhs += src[k];
    next[k] = 2.0 * cur[k] - prev[k] + dt2 * rhs;
  };
  switch (domain_.kind()) {
    case DomainKind::interval: {
      const double c = 1.0 / (spacing_[0] * spacing_[0]);
      const int i0 = std::max(box.i0, 1), i1 = std::min(box.i1, cells_[0] - 1);
      for (int i = i0; i <= i1; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        finish(k, c * (cur[k - 1] - 2.0 * cur[k] + cur[k + 1]));
      }
      break;
    }
    case DomainKind::rectangle: {
      const double cx = 1.0 / (spacing_[0] * spacing_[0]);
      const double cy = 1.0 / (spacing_[1] * spacing_[1]);
      const std::size_t w = static_cast<std::size_t>(cells_[0] + 1);
      const int i0 = std::max(box.i0, 1), i1 = std::min(box.i1, cells_[0] - 1);
      const int j0 = std::max(box.j0, 1), j1 = std::min(box.j1, cells_[1] - 1);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          const std::size_t k = index(i, j);
          const double c0 = cur[k];
          finish(k, cx * (cur[k - 1] - 2.0 * c0 + cur[k + 1]) +
                        cy * (cur[k - w] - 2.0 * c0 + cur[k + w]));
        }
      break;
    }
    case DomainKind::disk: {
      const int nr = cells_[0], nth = cells_[1];
      const double dr = spacing_[0], dth = spacing_[1];
      double mean = 0.0;
      for (int j = 0; j < nth; ++j) mean += cur[index(1, j)];
      mean /= nth;
      finish(0, 4.0 * (mean - cur[0]) / (dr * dr));
      for (int i = 1; i < nr; ++i) {
        const double r = i * dr;
        const double crr = 1.0 / (dr * dr), cr = 1.0 / (2.0 * r * dr);
        const double cth = 1.0 / (r * r * dth * dth);
        for (int j = 0; j < nth; ++j) {
          const std::size_t k = index(i, j);
          const double in = cur[index(i - 1, j)], out = cur[index(i + 1, j)];
          const double c0 = cur[k];
          const double lap = crr * (out - 2.0 * c0 + in) + cr * (out - in) +
                             cth * (cur[index(i, j - 1)] - 2.0 * c0 + cur[index(i, j + 1)]);
          finish(k, lap);
        }
      }
      break;
    }
  }
}

void SpatialGrid::laplacian(std::span<const double> u, std::span<double> out) const {
  if (u.size() != size_ || out.size() != size_)
    throw Error(ErrorKind::shape, "laplacian: array size does not match grid");
  // Reuse the update kernel: next = 2cur - prev + lap with prev = 2cur.
  std::vector<double> prev(size_);
  for (std::size_t k = 0; k < size_; ++k) prev[k] = 2.0 * u[k];
  std::fill(out.begin(), out.end(), 0.0);
  leapfrog_update(prev.data(), u.data(), out.data(), nullptr, nullptr, 1.0, full_box());
  for (std::size_t k : boundary_indices_) out[k] = 0.0;
}

double SpatialGrid::integrate(std::span<const double> f) const {
  double s = 0.0;
  for (std::size_t k = 0; k < size_; ++k) s += weights_[k] * f[k];
  return s;
}

double SpatialGrid::l2_norm_sq(std::span<const double> u) const {
  double s = 0.0;
  for (std::size_t k = 0; k < size_; ++k) s += weights_[k] * u[k] * u[k];
  return s;
}

double SpatialGrid::gradient_norm_sq(std::span<const double> u) const {
  double s = 0.0;
  switch (domain_.kind()) {
    case DomainKind::interval: {
      const double h = spacing_[0];
      for (int i = 0; i < cells_[0]; ++i) {
        const double d = (u[static_cast<std::size_t>(i + 1)] - u[static_cast<std::size_t>(i)]) / h;
        s += h * d * d;
      }
      break;
    }
    case DomainKind::rectangle: {
      const int nx = cells_[0], ny = cells_[1];
      const double hx = spacing_[0], hy = spacing_[1];
      for (int j = 0; j <= ny; ++j) {
        const double wy = hy * ((j == 0 || j == ny) ? 0.5 : 1.0);
        for (int i = 0; i < nx; ++i) {
          const double d = (u[index(i + 1, j)] - u[index(i, j)]) / hx;
          s += hx * wy * d * d;
        }
      }
      for (int i = 0; i <= nx; ++i) {
        const double wx = hx * ((i == 0 || i == nx) ? 0.5 : 1.0);
        for (int j = 0; j < ny; ++j) {
          const double d = (u[index(i, j + 1)] - u[index(i, j)]) / hy;
          s += hy * wx * d * d;
        }
      }
      break;
    }
    case DomainKind::disk: {
      const int nr = cells_[0], nth = cells_[1];
      const double dr = spacing_[0], dth = spacing_[1];
      for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nth; ++j) {
          const double d = (u[index(i + 1, j)] - u[index(i, j)]) / dr;
          s += (i + 0.5) * dr * dr * dth * d * d;
        }
      for (int i = 1; i <= nr; ++i) {
        const double r = i * dr;
        const double wr = (i == nr) ? 0.5 * dr : dr;
        for (int j = 0; j < nth; ++j) {
          const double d = (u[index(i, j + 1)] - u[index(i, j)]) / (r * dth);
          s += wr * r * dth * d * d;
        }
      }
      break;
    }
  }
  return s;
}

double SpatialGrid::interpolate(std::span<const double> u, Point p) const {
  auto locate = [](double x, double h, int n, int& i, double& w) {
    double f = x / h;
    f = std::clamp(f, 0.0, static_cast<double>(n));
    i = std::min(static_cast<int>(std::floor(f)), n - 1);
    w = f - i;
  };
  switch (domain_.kind()) {
    case DomainKind::interval: {
      int i;
      double w;
      locate(p.x, spacing_[0], cells_[0], i, w);
      return (1 - w) * u[static_cast<std::size_t>(i)] + w * u[static_cast<std::size_t>(i + 1)];
    }
    case DomainKind::rectangle: {
      int i, j;
      double wx, wy;
      locate(p.x, spacing_[0], cells_[0], i, wx);
      locate(p.y, spacing_[1], cells_[1], j, wy);
      return (1 - wy) * ((1 - wx) * u[index(i, j)] + wx * u[index(i + 1, j)]) +
             wy * ((1 - wx) * u[index(i, j + 1)] + wx * u[index(i + 1, j + 1)]);
    }
    case DomainKind::disk: {
      const double r = std::min(std::hypot(p.x, p.y), domain_.radius());
      const double th = r > 0 ? wrap_angle(std::atan2(p.y, p.x)) : 0.0;
      const double ft = th / spacing_[1];
      const int j = static_cast<int>(std::floor(ft));
      const double wt = ft - j;
      auto ring = [&](int i) {
        if (i == 0) return u[0];
        return (1 - wt) * u[index(i, j)] + wt * u[index(i, j + 1)];
      };
      int i;
      double wr;
      locate(r, spacing_[0], cells_[0], i, wr);
      return (1 - wr) * ring(i) + wr * ring(i + 1);
    }
  }
  return 0.0;
}

double SpatialGrid::outward_derivative(std::span<const double> u, const BoundaryNode& b) const {
  return (3.0 * u[b.node] - 4.0 * u[b.inward1] + u[b.inward2]) / (2.0 * b.h);
}

// --------------------------------------------------------- SpaceTimeGrid

SpaceTimeGrid::SpaceTimeGrid(SpatialGrid space, int steps, double T, double T_prime,
                             double cfl_factor)
    : space_(std::move(space)), steps_(steps), T_(T), T_prime_(T_prime > 0 ? T_prime : T),
      cfl_(cfl_factor) {
  if (steps_ < 8) throw Error(ErrorKind::config, "time grids need at least 8 steps");
  if (!(T_ > 0.0)) throw Error(ErrorKind::config, "final time must be positive");
  if (T_prime_ < T_) throw Error(ErrorKind::config, "horizon T' must be at least T");
  if (!(cfl_ > 0.0 && cfl_ <= 1.0)) throw Error(ErrorKind::config, "cfl factor must lie in (0, 1]");
  const double limit = cfl_ * space_.min_spacing();
  if (dt() > limit * (1.0 + 1e-12))
    throw Error(ErrorKind::config, "time step violates the CFL bound",
                {{"dt", dt()}, {"limit", limit}});
}

SpaceTimeGrid SpaceTimeGrid::with_cfl(SpatialGrid space, double T, double cfl_factor,
                                      double T_prime) {
  const double limit = cfl_factor * space.min_spacing();
  const int steps = std::max(8, static_cast<int>(std::ceil(T / limit - 1e-9)));
  return SpaceTimeGrid(std::move(space), steps, T, T_prime, cfl_factor);
}

bool SpaceTimeGrid::same_shape(const SpaceTimeGrid& o) const {
  return steps_ == o.steps_ && space_.size() == o.space_.size() &&
         space_.domain().kind() == o.space_.domain().kind() &&
         space_.cells() == o.space_.cells() && std::abs(T_ - o.T_) <= 1e-12 * T_;
}

}  // namespace wavenl
