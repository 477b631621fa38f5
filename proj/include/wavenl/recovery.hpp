#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "wavenl/linearization.hpp"
#include "wavenl/probe.hpp"

namespace wavenl {

// Local flat grid around a probe. The probe face becomes face 0 of an
// interval or rectangle; the clock starts when the probe data switches on
// (t0 - 2 delta) and stops at the end of the filter support (t0 + delta / 4).
// The sides are far enough that nothing reflected from them reaches the
// filter support |t - t0|, |s - s0| <= delta / 4 in time, so traces there agree
// with the global problem.
struct ProbeWindow {
  Domain global;
  Domain local;
  int face = 0;
  double s_lo = 0.0;     // global tangential parameter of local x = 0
  double t_start = 0.0;  // global time of local t = 0
  SpaceTimeGrid grid;    // wave grid (resolves the probe phase)

  Point to_global(Point local_point) const;
  double global_time(int level) const { return t_start + grid.time(level); }
  double global_s(const BoundaryNode& node) const { return s_lo + node.s; }
  // Probe data in window coordinates (global phase).
  LinearData probe_data(const ProbeSpec& spec) const;
  // q restricted to the window on a grid no finer than q's own.
  Potential restrict(const Potential& q) const;
  BoundaryPortion probe_face() const { return {"probe", 0, 0.0, local.face_length(0)}; }
};

// points_per_wavelength sets the wave grid step 2 pi / (ppw rho).
ProbeWindow make_probe_window(const Domain& domain, const ProbeSpec& spec,
                              double points_per_wavelength = 30.0);

// Outward normal derivative on the window's probe face for potential q
// (q on any global grid), or for q = 0.
BoundaryTrace probe_trace(const ProbeWindow& window, const ProbeSpec& spec, const Potential& q);
BoundaryTrace probe_trace_free(const ProbeWindow& window, const ProbeSpec& spec);

// One ladder rung: the same probe measured with two potentials.
struct ProbeMeasurement {
  ProbeSpec probe;
  ProbeWindow window;
  BoundaryTrace trace1;
  BoundaryTrace trace2;
};

struct PointEstimate {
  double t0 = 0.0;
  Point x0{};
  Complex estimate{};   // q1 - q2 at (t0, x0)
  double value = 0.0;   // real part
  double imag_ratio = 0.0;
  std::vector<double> rho;
  std::vector<Complex> filtered;  // matched-filter values m(rho)
  Complex limit{};                // extrapolated m
  double sigma = 0.0;             // fitted decay exponent
  bool extrapolation_warning = false;
  bool reliability_warning = false;
};

// Matched filter of rho (trace1 - trace2) against e^{i rho t} over a window of
// width delta / 2 around (t0, s0); fit m(rho) = m_inf + c rho^-sigma and return
// -2 i m_inf. A single rung skips the fit.
PointEstimate recover_q_difference_point(const std::vector<ProbeMeasurement>& ladder);
// Matched-filter value of one rung.
Complex matched_filter(const ProbeMeasurement& rung);

// Partial-data faces for a direction omega: inputs live on U (nu . omega >=
// -margin), traces are read on V (nu . omega <= margin).
struct PartialDataFaces {
  Point omega{1.0, 0.0};
  double margin = 0.0;
  bool in_U(const Domain& d, int face, double s) const;
  bool in_V(const Domain& d, int face, double s) const;
};

enum class SourceKind { simulated_black_box, injected_traces };

struct MeasurementResult {
  BoundaryTrace trace;
  std::optional<std::vector<Complex>> final_state;
};

// Linearized boundary measurements indexed by the background level lambda.
// Implementations must tolerate concurrent calls.
class MeasurementSource {
 public:
  virtual ~MeasurementSource() = default;
  virtual SourceKind kind() const = 0;
  // Probe response on a window; background data lambda * chi on the lateral
  // boundary (or (lambda, lambda, 0) in the constant-data variant).
  virtual BoundaryTrace apply_probe(double lambda, const ProbeWindow& window,
                                    const ProbeSpec& spec) const = 0;
  // Response to a general input on the source's coarse grid: traces on the
  // portion (or on V in the partial-data variant) and the final state.
  virtual MeasurementResult apply(double lambda, const LinearData& input,
                                  const BoundaryPortion& portion) const = 0;
};

enum class Background {
  lateral,   // f = lambda chi(t), u0 = u1 = 0
  constant,  // (lambda, lambda, 0)
};

struct SimulationOptions {
  Background background = Background::lateral;
  double chi_ramp = 0.1;     // chi(t) = smooth_step(t / chi_ramp)
  double noise_level = 0.0;  // relative to the trace RMS
  std::uint64_t seed = 1;
  std::optional<PartialDataFaces> partial;  // constant background only
  std::vector<double> admissible;           // [-L, L] when set; empty: unchecked
};

class SimulatedSource final : public MeasurementSource {
 public:
  SimulatedSource(Nonlinearity F, SpaceTimeGrid grid, SimulationOptions options);
  SourceKind kind() const override { return SourceKind::simulated_black_box; }
  BoundaryTrace apply_probe(double lambda, const ProbeWindow& window, const ProbeSpec& spec) const override;
  MeasurementResult apply(double lambda, const LinearData& input, const BoundaryPortion& portion) const override;
  const SpaceTimeGrid& grid() const { return grid_; }
  const SimulationOptions& options() const { return opt_; }

 private:
  std::shared_ptr<const Potential> background(double lambda) const;
  void add_noise(BoundaryTrace& trace, std::uint64_t salt) const;
  void check_partial(const LinearData& input) const;

  Nonlinearity F_;
  SpaceTimeGrid grid_;
  SimulationOptions opt_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const Potential>> cache_;
};

// Replays traces recorded elsewhere, keyed by (lambda, probe rho, t0, face, s0).
class InjectedSource final : public MeasurementSource {
 public:
  SourceKind kind() const override { return SourceKind::injected_traces; }
  void insert(double lambda, const ProbeSpec& spec, BoundaryTrace trace);
  BoundaryTrace apply_probe(double lambda, const ProbeWindow& window, const ProbeSpec& spec) const override;
  MeasurementResult apply(double lambda, const LinearData& input, const BoundaryPortion& portion) const override;

 private:
  std::map<std::vector<double>, BoundaryTrace> traces_;
};

std::unique_ptr<MeasurementSource> simulate_measurements(const Nonlinearity& F_true,
                                                         const SpaceTimeGrid& grid,
                                                         const SimulationOptions& options);

struct ProbePoint {
  double t0 = 0.0;
  int face = 0;
  double s0 = 0.0;
};

// {10, 20, 40} / delta. The probe needs rho delta >> 1 before the filtered
// values settle into the rho^-sigma tail.
std::vector<double> default_rho_ladder(double delta);

struct RecoveryConfig {
  std::vector<double> lambda_grid;  // symmetric, contains 0
  double delta = 0.0;
  std::vector<ProbePoint> probe_points;
  std::vector<double> rho_ladder;
  double points_per_wavelength = 30.0;
  double plateau = 0.0;  // probe plateau; <= 0: 2 delta
  int threads = 1;

  void validate(const Domain& domain, double T) const;
};

// duF(t0, x0, lambda) on probe_points x lambda_grid (row per point).
struct LateralRecovery {
  std::vector<ProbePoint> points;
  std::vector<Point> positions;
  std::vector<double> lambdas;
  std::vector<std::vector<PointEstimate>> estimates;  // [point][lambda]
  double value(std::size_t point, std::size_t lambda) const {
    return estimates[point][lambda].value;
  }
};

LateralRecovery recover_duF_lateral(const MeasurementSource& source, const RecoveryConfig& config,
                                    const Domain& domain, double T);

// F(lambda) = anchor + integral_0^lambda duF by the trapezoid rule on the grid.
// samples[p][l] (NaN marks a missing sample).
std::vector<std::vector<double>> assemble_F(const std::vector<std::vector<double>>& samples,
                                            const std::vector<double>& lambdas,
                                            const std::vector<double>& anchor);

// Interior potential plug-in for t > 0 (stands in for external interior
// reconstruction); returns q_{F, lambda}.
using InteriorOracle = std::function<Potential(double lambda)>;

struct InitialRecovery {
  std::vector<double> lambdas;
  std::vector<std::vector<double>> duF;  // [lambda][node] at t = 0
  std::vector<std::vector<double>> F;    // [lambda][node]
  std::vector<Potential> interior;       // oracle output per lambda, if any
  bool oracle_mode = false;
};

// Constant data (lambda, lambda, 0): u(0, .) = lambda, so q_{F, lambda}(0, x)
// = duF(0, x, lambda). Blow-up before T is a range error.
InitialRecovery recover_F_initial_interior(const Nonlinearity& F, const std::vector<double>& lambdas,
                                           const SpaceTimeGrid& grid, const std::vector<double>& anchor,
                                           const InteriorOracle& oracle = {});

}  // namespace wavenl
