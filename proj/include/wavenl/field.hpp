#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "wavenl/geometry.hpp"

namespace wavenl {

using Complex = std::complex<double>;

// Space-time samples on (steps+1) levels of a SpaceTimeGrid. Real fields keep
// an empty imaginary buffer.
class WaveField {
 public:
  WaveField(SpaceTimeGrid grid, bool complex_valued);
  static WaveField from_real(SpaceTimeGrid grid, std::vector<double> re);

  const SpaceTimeGrid& grid() const { return grid_; }
  bool is_real() const { return im_.empty(); }
  std::size_t nodes() const { return grid_.space().size(); }
  int levels() const { return grid_.levels(); }

  std::span<double> real_level(int n);
  std::span<const double> real_level(int n) const;
  std::span<double> imag_level(int n);
  std::span<const double> imag_level(int n) const;
  Complex at(int n, std::size_t k) const;
  double real_at(int n, std::size_t k) const { return re_[offset(n) + k]; }
  void set(int n, std::size_t k, Complex v);

  const std::vector<double>& real_values() const { return re_; }
  const std::vector<double>& imag_values() const { return im_; }
  double max_abs() const;
  bool finite() const;

  void write_binary(const std::filesystem::path& path) const;
  static WaveField read_binary(const std::filesystem::path& path, const SpaceTimeGrid& grid);
  // One time level as CSV: x, y, re, im.
  void write_csv_level(const std::filesystem::path& path, int n) const;

 private:
  std::size_t offset(int n) const { return static_cast<std::size_t>(n) * nodes(); }
  SpaceTimeGrid grid_;
  std::vector<double> re_;
  std::vector<double> im_;
};

// Discrete wave operator on interior nodes; one-sided second-order time
// stencil at the first and last level.
WaveField apply_wave_operator(const WaveField& u);

// Complex samples of a normal derivative on [0,T] x portion.
struct BoundaryTrace {
  BoundaryPortion portion;
  double dt = 0.0;
  int levels = 0;
  std::vector<BoundaryNode> nodes;
  std::vector<Complex> values;  // levels x nodes, row-major

  std::size_t width() const { return nodes.size(); }
  Complex& at(int n, std::size_t j) { return values[static_cast<std::size_t>(n) * width() + j]; }
  Complex at(int n, std::size_t j) const { return values[static_cast<std::size_t>(n) * width() + j]; }
  // Tangential quadrature weight of node j (1 for point faces).
  double tangential_weight(std::size_t j) const;
  // L2 norm over (0,T) x portion, trapezoid in time.
  double l2_norm() const;
  bool finite() const;
};

BoundaryTrace operator-(const BoundaryTrace& a, const BoundaryTrace& b);
BoundaryTrace operator+(const BoundaryTrace& a, const BoundaryTrace& b);
BoundaryTrace operator*(Complex s, const BoundaryTrace& a);

}  // namespace wavenl
