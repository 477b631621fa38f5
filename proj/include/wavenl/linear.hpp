#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "wavenl/field.hpp"
#include "wavenl/nonlinearity.hpp"

namespace wavenl {

// Real potential sampled on a space-time grid. Off-grid values use linear
// interpolation in t and bilinear in space, clamped (constant extension).
class Potential {
 public:
  Potential(SpaceTimeGrid grid, std::vector<double> values);
  static Potential sample(const SpaceTimeGrid& grid, const SpaceTimeFn& fn);
  static Potential constant(const SpaceTimeGrid& grid, double c);

  const SpaceTimeGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> level(int n) const;
  double at(double t, Point x) const;
  // Values at the nodes of `target` at time t.
  void sample_level(const SpatialGrid& target, double t, std::span<double> out) const;
  // Restriction/prolongation onto another space-time grid.
  Potential resample(const SpaceTimeGrid& target) const;

  double sup() const;
  double h2_norm() const;
  double hl_norm(int order) const;
  bool is_zero() const { return zero_; }
  std::uint64_t hash() const;

 private:
  SpaceTimeGrid grid_;
  std::vector<double> values_;
  bool zero_ = false;
};

// Space-time lattice layout used for Sobolev surrogates of grid fields.
struct LatticeShape {
  std::vector<int> dims;
  std::vector<double> h;
};
LatticeShape lattice_shape(const SpaceTimeGrid& grid);
// Copies grid samples (levels x nodes) into the lattice layout.
std::vector<double> to_lattice(const SpaceTimeGrid& grid, std::span<const double> values);

using ComplexBoundaryFn = std::function<Complex(double t, Point x)>;
using ComplexSpatialFn = std::function<Complex(Point)>;

// Source hook: fills re/im at level n, returns false when the level is
// identically zero; `support` receives the index box of nonzero entries.
using SourceFn =
    std::function<bool(int n, std::span<double> re, std::span<double> im, ActiveBox& support)>;

// Dirichlet trace h, initial data (h0, h1), optional source. Empty callables
// mean zero. `quiet_until` promises h and the source vanish for t < quiet_until.
struct LinearData {
  ComplexBoundaryFn h;
  ComplexSpatialFn h0;
  ComplexSpatialFn h1;
  SourceFn source;
  bool complex_valued = false;
  double quiet_until = 0.0;

  static LinearData from_real(const DirichletData& d);
};

using LevelObserver =
    std::function<void(int n, std::span<const double> re, std::span<const double> im)>;

// Leapfrog march of w_tt - lap w + q w = source with Dirichlet trace h.
// Streams every level to `observe`; imaginary spans are empty for real data.
void march_linear(const Potential* q, const LinearData& data, const SpaceTimeGrid& grid,
                  const LevelObserver& observe);

WaveField solve_linear(const Potential& q, const LinearData& data, const SpaceTimeGrid& grid);

BoundaryTrace normal_derivative_trace(const WaveField& w, const BoundaryPortion& portion);

enum class DtnMode { lateral_only, with_final_state };

struct DtnResult {
  BoundaryTrace trace;
  std::optional<std::vector<Complex>> final_w;
  std::optional<std::vector<Complex>> final_wt;
};

DtnResult dtn_apply(const Potential& q, const LinearData& data, const SpaceTimeGrid& grid,
                    const BoundaryPortion& portion, DtnMode mode);
// Same with q = 0 (no potential sampling at all).
DtnResult dtn_apply_free(const LinearData& data, const SpaceTimeGrid& grid,
                         const BoundaryPortion& portion, DtnMode mode);

// Discrete H^1 norm of a spatial field (real and imaginary parts combined).
double h1_norm(const SpatialGrid& g, std::span<const Complex> w);

// DtN operator materialized over a basis of boundary inputs: column b holds
// the flattened trace of basis element b.
struct DtnMatrix {
  int levels = 0;
  int width = 0;
  int columns = 0;
  std::vector<Complex> entries;  // column-major
  std::uint64_t potential_hash = 0;
  std::string portion;

  void save(const std::filesystem::path& stem) const;  // stem.bin + stem.json
  static DtnMatrix load(const std::filesystem::path& stem);
};

DtnMatrix materialize_dtn(const Potential& q, const std::vector<LinearData>& basis,
                          const SpaceTimeGrid& grid, const BoundaryPortion& portion,
                          int threads = 1);

}  // namespace wavenl
