#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "wavenl/linear.hpp"

namespace wavenl {

// Support radius rho^(-1/(n+2)) of the space-time mollifier.
double mollifier_width(double rho, int n);

// Convolution with the scaled unit-mass bump; the potential is continued past
// its grid by cubic extrapolation in t and in the normal direction. Output lives
// on q's grid.
Potential mollify_potential(const Potential& q, double rho);

// Probe placement. Time profile chi: 1 on [-delta, delta], support 2 delta.
// Tangential profile phi: 1 on |s - s0| <= plateau, support plateau + delta.
struct ProbeSpec {
  double t0 = 0.0;
  int face = 0;
  double s0 = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double plateau = 0.0;       // <= 0: 2 delta
  double lattice_step = 0.0;  // <= 0: delta / 16
  std::string portion;        // optional: phi1 must stay inside this portion

  double plateau_width() const { return plateau > 0.0 ? plateau : 2.0 * delta; }
  double step() const { return lattice_step > 0.0 ? lattice_step : delta / 16.0; }
  double chi(double s) const;
  double chi1(double s) const;
  double phi(const Domain& d, double s) const;
  double phi1(const Domain& d, double s) const;
};

// Checks the width invariant delta < min(collar, t0, T - t0) / 16 and the
// support conditions; throws collar/config errors.
void validate_probe(const Domain& domain, const ProbeSpec& spec, double T);

// Probe Dirichlet data: e^{i rho t} chi(t - t0) phi(s) on the probe face for
// t <= t0 + delta, even reflection about t0 + delta afterwards, 0 elsewhere.
ComplexBoundaryFn probe_boundary_fn(const Domain& domain, const ProbeSpec& spec);
LinearData probe_linear_data(const Domain& domain, const ProbeSpec& spec);

struct ProbeLattice;

// Amplitudes of the geometric-optics solution e^{i rho (t - psi)}(a0 + a1/rho
// + a2/rho^2) on a lattice in (t, depth, s) with equal steps, so that the
// characteristics (s2 and s fixed) are lattice diagonals.
class GoProbe {
 public:
  const ProbeSpec& spec() const;
  const Domain& domain() const;
  double rho() const { return spec().rho; }
  double lattice_step() const;
  std::uint64_t potential_hash() const;

  // order 0, 1, 2 (a2 is the mollified-source amplitude); 3 gives a1 built
  // from the mollified potential. Zero outside the lattice.
  Complex amplitude(int order, double t, Point x) const;
  Complex ansatz(double t, Point x) const;
  Complex boundary_data(double t, Point x) const;
  // Residual (box + q) G with the phase removed, at (t, x).
  Complex residual(double t, Point x) const;

  // Inward normal derivative of the order-k amplitude at (t, s) on the face.
  Complex inward_derivative(int order, double t, double s) const;
  // Largest |a_k| over lattice nodes on the boundary, t <= t0 + delta.
  double boundary_max(int order) const;
  // Discrete H^2 norm of a2 over (0, t0 + delta) x collar.
  double a2_h2_norm() const;
  // Node-centred transport residuals for a0, a1, a2, each relative to the
  // size of its right-hand side.
  std::array<double, 3> transport_residuals() const;
  // L2 norm of the residual over (0, t0 + delta) x M.
  double residual_l2() const;

 private:
  friend GoProbe build_go_probe(const Domain&, const Potential&, const ProbeSpec&);
  explicit GoProbe(std::shared_ptr<const ProbeLattice> lat) : lat_(std::move(lat)) {}
  std::shared_ptr<const ProbeLattice> lat_;
};

GoProbe build_go_probe(const Domain& domain, const Potential& q, const ProbeSpec& spec);
std::pair<GoProbe, GoProbe> build_probe(const Domain& domain, const Potential& q1,
                                        const Potential& q2, const ProbeSpec& spec);

struct AnsatzResidual {
  double l2_residual = 0.0;
  double scaled = 0.0;
};

AnsatzResidual ansatz_residual(const GoProbe& probe, const Potential& q);

struct RemainderResult {
  WaveField R;
  double trace_norm = 0.0;
  double scaled_trace = 0.0;
};

// Solves (box + q) R = -(box + q) G with zero data on `grid` and measures the
// outward normal derivative of R over (0, t0 + delta) x boundary.
RemainderResult solve_remainder(const GoProbe& probe, const Potential& q, const SpaceTimeGrid& grid);

}  // namespace wavenl
