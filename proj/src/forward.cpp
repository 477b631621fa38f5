#include "wavenl/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "wavenl/error.hpp"
#include "wavenl/smooth.hpp"

namespace wavenl {

// --------------------------------------------------------------- Lifting

namespace {

// Laplacian stencil rows for the interior nodes (same coefficients as the
// leapfrog kernel).
std::vector<Eigen::Triplet<double>> laplacian_triplets(const SpatialGrid& g) {
  std::vector<Eigen::Triplet<double>> t;
  auto add = [&](std::size_t row, std::size_t col, double v) {
    t.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
  };
  const auto c = g.cells();
  switch (g.domain().kind()) {
    case DomainKind::interval: {
      const double a = 1.0 / (g.spacing()[0] * g.spacing()[0]);
      for (int i = 1; i < c[0]; ++i) {
        const auto k = static_cast<std::size_t>(i);
        add(k, k - 1, a);
        add(k, k, -2 * a);
        add(k, k + 1, a);
      }
      break;
    }
    case DomainKind::rectangle: {
      const double ax = 1.0 / (g.spacing()[0] * g.spacing()[0]);
      const double ay = 1.0 / (g.spacing()[1] * g.spacing()[1]);
      for (int j = 1; j < c[1]; ++j)
        for (int i = 1; i < c[0]; ++i) {
          const auto k = g.index(i, j);
          add(k, g.index(i - 1, j), ax);
          add(k, g.index(i + 1, j), ax);
          add(k, g.index(i, j - 1), ay);
          add(k, g.index(i, j + 1), ay);
          add(k, k, -2 * ax - 2 * ay);
        }
      break;
    }
    case DomainKind::disk: {
      const int nr = c[0], nth = c[1];
      const double dr = g.spacing()[0], dth = g.spacing()[1];
      const double a0 = 4.0 / (dr * dr);
      for (int j = 0; j < nth; ++j) add(0, g.index(1, j), a0 / nth);
      add(0, 0, -a0);
      for (int i = 1; i < nr; ++i) {
        const double r = i * dr;
        const double crr = 1.0 / (dr * dr), cr = 1.0 / (2.0 * r * dr);
        const double cth = 1.0 / (r * r * dth * dth);
        for (int j = 0; j < nth; ++j) {
          const auto k = g.index(i, j);
          add(k, g.index(i + 1, j), crr + cr);
          add(k, g.index(i - 1, j), crr - cr);
          add(k, g.index(i, j - 1), cth);
          add(k, g.index(i, j + 1), cth);
          add(k, k, -2 * crr - 2 * cth);
        }
      }
      break;
    }
  }
  return t;
}

double smooth_step_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a * b * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x))) / ((a + b) * (a + b));
}

double smooth_step_d2(double x) {
  const double h = 1e-5;
  return (smooth_step_d1(x + h) - smooth_step_d1(x - h)) / (2 * h);
}

}  // namespace

struct Lifting::Impl {
  SpaceTimeGrid grid;
  DirichletData data;
  std::array<std::vector<double>, 5> c;      // Taylor coefficients at nodes
  std::array<std::vector<double>, 5> lap_c;  // discrete Laplacians of c
  std::vector<std::size_t> interior;          // node -> unknown index map
  std::vector<long> unknown_of;
  Eigen::SparseMatrix<double> coupling;       // interior rows, boundary columns
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double plateau = 0.0, ramp = 0.0;

  explicit Impl(SpaceTimeGrid g) : grid(std::move(g)) {}

  double B(double t, int d) const {
    const double x = (t - plateau) / ramp;
    switch (d) {
      case 0: return 1.0 - smooth_step(x);
      case 1: return -smooth_step_d1(x) / ramp;
      default: return -smooth_step_d2(x) / (ramp * ramp);
    }
  }

  // d-th time derivative of P at node k.
  double P(double t, std::size_t k, int d) const {
    double s = 0.0, fac = 1.0;
    for (int m = d; m < 5; ++m) {
      s += c[static_cast<std::size_t>(m)][k] * std::pow(t, m - d) / fac;
      fac *= (m - d + 1);
    }
    return s;
  }

  double BP(double t, std::size_t k, int d) const {
    if (d == 0) return B(t, 0) * P(t, k, 0);
    if (d == 1) return B(t, 1) * P(t, k, 0) + B(t, 0) * P(t, k, 1);
    return B(t, 2) * P(t, k, 0) + 2 * B(t, 1) * P(t, k, 1) + B(t, 0) * P(t, k, 2);
  }

  double f_t(double t, Point x) const {
    const double h = 1e-3 * std::max(grid.T_prime(), 1e-3);
    auto g = [&](double s) { return data.f(s, x); };
    if (t < 2 * h) return one_sided_derivative([&](double s) { return g(t + s); }, 1, h);
    return (g(t - 2 * h) - 8 * g(t - h) + 8 * g(t + h) - g(t + 2 * h)) / (12 * h);
  }

  double f_tt(double t, Point x) const {
    const double h = 1e-3 * std::max(grid.T_prime(), 1e-3);
    auto g = [&](double s) { return data.f(s, x); };
    if (t < 2 * h) {
      return one_sided_derivative([&](double s) { return g(t + s); }, 2, h);
    }
    return (-g(t - 2 * h) + 16 * g(t - h) - 30 * g(t) + 16 * g(t + h) - g(t + 2 * h)) / (12 * h * h);
  }

  // Harmonic extension of boundary values (indexed by node) into `out`.
  void extend(const std::vector<double>& boundary_vals, std::span<double> out) const {
    const SpatialGrid& g = grid.space();
    Eigen::VectorXd gb(static_cast<Eigen::Index>(g.size()));
    gb.setZero();
    for (std::size_t k : g.boundary_indices()) gb[static_cast<Eigen::Index>(k)] = boundary_vals[k];
    Eigen::VectorXd rhs = -(coupling * gb);
    Eigen::VectorXd x = lu.solve(rhs);
    for (std::size_t k = 0; k < g.size(); ++k)
      out[k] = g.is_boundary(k) ? boundary_vals[k] : x[unknown_of[k]];
  }
};

Lifting::Lifting(const DirichletData& data, const SpaceTimeGrid& grid, LiftOrder order)
    : impl_(std::make_unique<Impl>(grid)) {
  const DataReport rep = validate_data(data, grid);
  const int needed = order == LiftOrder::full ? 5 : 2;
  for (int i = 0; i < needed; ++i)
    if (rep.comp1[static_cast<std::size_t>(i)] > rep.threshold(i))
      throw Error(ErrorKind::compatibility,
                  "compatibility condition " + std::to_string(i + 1) + " fails",
                  {{"condition", i + 1}, {"residual", rep.comp1[static_cast<std::size_t>(i)]}});
  Impl& m = *impl_;
  m.data = data;
  m.plateau = 0.5 * grid.T_prime();
  m.ramp = 0.5 * grid.T_prime();
  const SpatialGrid& g = grid.space();
  const Domain& d = g.domain();
  const std::size_t N = g.size();
  const double hc = 1e-2 * (d.kind() == DomainKind::disk ? d.radius() : d.extent(0));
  const SpatialFn lap_u0 = [&](Point x) { return callable_laplacian(data.u0, d, x, hc); };
  for (auto& v : m.c) v.assign(N, 0.0);
  for (std::size_t k = 0; k < N && order == LiftOrder::full; ++k) {
    const Point p = g.node(k);
    m.c[0][k] = data.u0(p);
    m.c[1][k] = data.u1(p);
    m.c[2][k] = lap_u0(p);
    m.c[3][k] = callable_laplacian(data.u1, d, p, hc);
    m.c[4][k] = callable_bilaplacian(data.u0, d, p, 0.5 * hc);
  }
  for (std::size_t i = 0; i < 5; ++i) {
    m.lap_c[i].assign(N, 0.0);
    g.laplacian(m.c[i], m.lap_c[i]);
  }

  m.unknown_of.assign(N, -1);
  for (std::size_t k = 0; k < N; ++k)
    if (!g.is_boundary(k)) {
      m.unknown_of[k] = static_cast<long>(m.interior.size());
      m.interior.push_back(k);
    }
  const auto trip = laplacian_triplets(g);
  std::vector<Eigen::Triplet<double>> inner, couple;
  for (const auto& t : trip) {
    const auto row = static_cast<std::size_t>(t.row()), col = static_cast<std::size_t>(t.col());
    const long r = m.unknown_of[row];
    if (g.is_boundary(col)) {
      couple.emplace_back(static_cast<int>(r), static_cast<int>(col), t.value());
    } else {
      inner.emplace_back(static_cast<int>(r), static_cast<int>(m.unknown_of[col]), t.value());
    }
  }
  const auto ni = static_cast<Eigen::Index>(m.interior.size());
  Eigen::SparseMatrix<double> A(ni, ni);
  A.setFromTriplets(inner.begin(), inner.end());
  m.coupling.resize(ni, static_cast<Eigen::Index>(N));
  m.coupling.setFromTriplets(couple.begin(), couple.end());
  m.lu.compute(A);
  if (m.lu.info() != Eigen::Success) throw Error(ErrorKind::evaluation, "harmonic extension factorization failed");
}

Lifting::~Lifting() = default;
Lifting::Lifting(Lifting&&) noexcept = default;

const SpaceTimeGrid& Lifting::grid() const { return impl_->grid; }

void Lifting::values(double t, std::span<double> out) const {
  const Impl& m = *impl_;
  const SpatialGrid& g = m.grid.space();
  std::vector<double> bvals(g.size(), 0.0);
  for (std::size_t k : g.boundary_indices()) bvals[k] = m.data.f(t, g.node(k)) - m.BP(t, k, 0);
  m.extend(bvals, out);
  for (std::size_t k = 0; k < g.size(); ++k) out[k] += m.BP(t, k, 0);
  for (std::size_t k : g.boundary_indices()) out[k] = m.data.f(t, g.node(k));
}

void Lifting::time_derivative(double t, std::span<double> out) const {
  const Impl& m = *impl_;
  const SpatialGrid& g = m.grid.space();
  std::vector<double> bvals(g.size(), 0.0);
  for (std::size_t k : g.boundary_indices()) bvals[k] = m.f_t(t, g.node(k)) - m.BP(t, k, 1);
  m.extend(bvals, out);
  for (std::size_t k = 0; k < g.size(); ++k) out[k] += m.BP(t, k, 1);
}

void Lifting::wave_operator(double t, std::span<double> out) const {
  const Impl& m = *impl_;
  const SpatialGrid& g = m.grid.space();
  std::vector<double> bvals(g.size(), 0.0);
  for (std::size_t k : g.boundary_indices()) bvals[k] = m.f_tt(t, g.node(k)) - m.BP(t, k, 2);
  m.extend(bvals, out);
  const double Bt = m.B(t, 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.is_boundary(k)) {
      out[k] = 0.0;
      continue;
    }
    double lapP = 0.0, fac = 1.0;
    for (int i = 0; i < 5; ++i) {
      lapP += m.lap_c[static_cast<std::size_t>(i)][k] * std::pow(t, i) / fac;
      fac *= (i + 1);
    }
    out[k] += m.BP(t, k, 2) - Bt * lapP;
  }
}

WaveField Lifting::field() const {
  const SpaceTimeGrid& grid = impl_->grid;
  WaveField G(grid, false);
  for (int n = 0; n < grid.levels(); ++n) values(grid.time(n), G.real_level(n));
  return G;
}

WaveField lift_data(const DirichletData& data, const SpaceTimeGrid& grid) {
  return Lifting(data, grid, LiftOrder::full).field();
}

// ------------------------------------------------------ semilinear solve

WaveField solve_semilinear(const Nonlinearity& F, const DirichletData& data,
                           const SpaceTimeGrid& grid, const SemilinearOptions& options) {
  const SpatialGrid& g = grid.space();
  const std::size_t N = g.size();
  const double dt = grid.dt(), dt2 = dt * dt;
  WaveField u(grid, false);
  std::vector<Point> nodes(N);
  for (std::size_t k = 0; k < N; ++k) nodes[k] = g.node(k);
  auto guard = [&](int n) {
    auto lev = u.real_level(n);
    double m = 0.0;
    bool finite = true;
    for (double v : lev) {
      finite = finite && std::isfinite(v);
      m = std::max(m, std::abs(v));
    }
    if (!finite || m > options.blowup_threshold)
      throw Error(ErrorKind::blowup, "solution left the bounded regime",
                  {{"blowup_time", grid.time(n)}, {"max_abs", m}});
  };
  auto set_boundary = [&](int n) {
    auto lev = u.real_level(n);
    for (std::size_t k : g.boundary_indices()) lev[k] = data.f(grid.time(n), nodes[k]);
  };
  auto u0 = u.real_level(0);
  for (std::size_t k = 0; k < N; ++k) u0[k] = data.u0(nodes[k]);
  set_boundary(0);
  guard(0);
  std::vector<double> lap(N), src(N);
  g.laplacian(u.real_level(0), lap);
  {
    auto u1 = u.real_level(1);
    for (std::size_t k = 0; k < N; ++k) {
      const double acc = lap[k] - F.value(0.0, nodes[k], u0[k]);
      u1[k] = u0[k] + dt * data.u1(nodes[k]) + 0.5 * dt2 * acc;
    }
    set_boundary(1);
    guard(1);
  }
  const ActiveBox box = g.full_box();
  for (int n = 1; n < grid.steps(); ++n) {
    const double t = grid.time(n);
    auto cur = u.real_level(n);
    for (std::size_t k = 0; k < N; ++k) src[k] = -F.value(t, nodes[k], cur[k]);
    g.leapfrog_update(u.real_level(n - 1).data(), cur.data(), u.real_level(n + 1).data(), nullptr,
                      src.data(), dt2, box);
    set_boundary(n + 1);
    guard(n + 1);
  }
  return u;
}

// ------------------------------------------------------- Picard-Duhamel

namespace {

// Truncated sine basis on a Cartesian grid: forward/backward transforms
// between interior node values and mode coefficients.
struct SineBasis {
  int nx = 0, ny = 0;       // cells
  int kx = 0, ky = 0;       // kept modes per axis
  bool two_d = false;
  std::vector<double> sx, sy;  // sin tables [mode][node index]
  std::vector<double> omega;   // per mode (row-major kx x ky)

  explicit SineBasis(const SpatialGrid& g) {
    const Domain& d = g.domain();
    two_d = d.kind() == DomainKind::rectangle;
    nx = g.cells()[0];
    kx = nx / 2;
    ny = two_d ? g.cells()[1] : 1;
    ky = two_d ? ny / 2 : 1;
    auto table = [](int n, int k) {
      std::vector<double> s(static_cast<std::size_t>(k * (n + 1)));
      for (int m = 1; m <= k; ++m)
        for (int i = 0; i <= n; ++i)
          s[static_cast<std::size_t>((m - 1) * (n + 1) + i)] = std::sin(std::numbers::pi * m * i / n);
      return s;
    };
    sx = table(nx, kx);
    if (two_d) sy = table(ny, ky);
    const double lx = d.extent(0), ly = two_d ? d.extent(1) : 1.0;
    for (int a = 1; a <= kx; ++a)
      for (int b = 1; b <= ky; ++b) {
        const double wx = std::numbers::pi * a / lx;
        const double wy = two_d ? std::numbers::pi * b / ly : 0.0;
        omega.push_back(std::sqrt(wx * wx + wy * wy));
      }
  }
  std::size_t modes() const { return omega.size(); }
  double SX(int m, int i) const { return sx[static_cast<std::size_t>(m * (nx + 1) + i)]; }
  double SY(int m, int j) const { return sy[static_cast<std::size_t>(m * (ny + 1) + j)]; }

  void forward(std::span<const double> v, std::span<double> coef) const {
    if (!two_d) {
      for (int m = 0; m < kx; ++m) {
        double s = 0.0;
        for (int i = 1; i < nx; ++i) s += v[static_cast<std::size_t>(i)] * SX(m, i);
        coef[static_cast<std::size_t>(m)] = 2.0 * s / nx;
      }
      return;
    }
    // Transform along x for every row, then along y.
    std::vector<double> tmp(static_cast<std::size_t>(kx * (ny + 1)), 0.0);
    for (int j = 1; j < ny; ++j)
      for (int m = 0; m < kx; ++m) {
        double s = 0.0;
        for (int i = 1; i < nx; ++i) s += v[static_cast<std::size_t>(j * (nx + 1) + i)] * SX(m, i);
        tmp[static_cast<std::size_t>(m * (ny + 1) + j)] = 2.0 * s / nx;
      }
    for (int m = 0; m < kx; ++m)
      for (int l = 0; l < ky; ++l) {
        double s = 0.0;
        for (int j = 1; j < ny; ++j) s += tmp[static_cast<std::size_t>(m * (ny + 1) + j)] * SY(l, j);
        coef[static_cast<std::size_t>(m * ky + l)] = 2.0 * s / ny;
      }
  }

  void backward(std::span<const double> coef, std::span<double> v) const {
    std::fill(v.begin(), v.end(), 0.0);
    if (!two_d) {
      for (int i = 1; i < nx; ++i) {
        double s = 0.0;
        for (int m = 0; m < kx; ++m) s += coef[static_cast<std::size_t>(m)] * SX(m, i);
        v[static_cast<std::size_t>(i)] = s;
      }
      return;
    }
    std::vector<double> tmp(static_cast<std::size_t>(kx * (ny + 1)), 0.0);
    for (int m = 0; m < kx; ++m)
      for (int j = 1; j < ny; ++j) {
        double s = 0.0;
        for (int l = 0; l < ky; ++l) s += coef[static_cast<std::size_t>(m * ky + l)] * SY(l, j);
        tmp[static_cast<std::size_t>(m * (ny + 1) + j)] = s;
      }
    for (int j = 1; j < ny; ++j)
      for (int i = 1; i < nx; ++i) {
        double s = 0.0;
        for (int m = 0; m < kx; ++m) s += tmp[static_cast<std::size_t>(m * (ny + 1) + j)] * SX(m, i);
        v[static_cast<std::size_t>(j * (nx + 1) + i)] = s;
      }
  }
};

// v_k(t_n) = -int_0^{t_n} sin(w (t_n - s)) / w g_k(s) ds, trapezoid in s,
// evaluated for all n with running sums.
void duhamel(const SineBasis& basis, const std::vector<double>& g, int levels, double dt,
             std::vector<double>& v) {
  const std::size_t M = basis.modes();
  v.assign(g.size(), 0.0);
  for (std::size_t k = 0; k < M; ++k) {
    const double w = basis.omega[k];
    double C = 0.0, S = 0.0;
    for (int n = 0; n < levels; ++n) {
      const double s = n * dt;
      const double gk = g[static_cast<std::size_t>(n) * M + k];
      const double cs = std::cos(w * s), sn = std::sin(w * s);
      if (n > 0) {
        // Full weight for the previous endpoint, half for the new one.
        const double gp = g[static_cast<std::size_t>(n - 1) * M + k];
        const double sp = (n - 1) * dt;
        C += 0.5 * dt * gp * std::cos(w * sp);
        S += 0.5 * dt * gp * std::sin(w * sp);
        C += 0.5 * dt * gk * cs;
        S += 0.5 * dt * gk * sn;
      }
      v[static_cast<std::size_t>(n) * M + k] = -(std::sin(w * s) * C - std::cos(w * s) * S) / w;
    }
  }
}

}  // namespace

PicardResult picard_duhamel_solve(const Nonlinearity& F, const DirichletData& data,
                                  const SpaceTimeGrid& grid, const PicardOptions& options) {
  const SpatialGrid& g = grid.space();
  if (!g.cartesian())
    throw Error(ErrorKind::config, "spectral oracle needs an interval or rectangle");
  const Lifting lift(data, grid, LiftOrder::first_order);
  const SineBasis basis(g);
  const std::size_t N = g.size(), M = basis.modes();
  const int L = grid.levels();
  const double dt = grid.dt();
  std::vector<Point> nodes(N);
  for (std::size_t k = 0; k < N; ++k) nodes[k] = g.node(k);

  std::vector<double> G(static_cast<std::size_t>(L) * N), boxG(static_cast<std::size_t>(L) * N);
  double gmax = 0.0;
  for (int n = 0; n < L; ++n) {
    std::span<double> gl(G.data() + static_cast<std::size_t>(n) * N, N);
    lift.values(grid.time(n), gl);
    lift.wave_operator(grid.time(n), std::span<double>(boxG.data() + static_cast<std::size_t>(n) * N, N));
    for (double x : gl) gmax = std::max(gmax, std::abs(x));
  }
  for (double x : G)
    if (!std::isfinite(x)) throw Error(ErrorKind::divergence, "lifting is not finite on the horizon");

  std::vector<double> src(static_cast<std::size_t>(L) * M), vcoef, vnodes(static_cast<std::size_t>(L) * N, 0.0);
  std::vector<double> level(N), coef(M);
  // Free evolution of the initial residual (u0 - G(0), u1 - G_t(0)).
  std::vector<double> free(static_cast<std::size_t>(L) * M, 0.0);
  {
    std::vector<double> r0(N), r1(N), a(M), b(M);
    lift.time_derivative(0.0, r1);
    for (std::size_t k = 0; k < N; ++k) {
      r0[k] = g.is_boundary(k) ? 0.0 : data.u0(nodes[k]) - G[k];
      r1[k] = g.is_boundary(k) ? 0.0 : data.u1(nodes[k]) - r1[k];
    }
    basis.forward(r0, a);
    basis.forward(r1, b);
    for (int n = 0; n < L; ++n)
      for (std::size_t m = 0; m < M; ++m) {
        const double w = basis.omega[m], t = grid.time(n);
        free[static_cast<std::size_t>(n) * M + m] = a[m] * std::cos(w * t) + b[m] * std::sin(w * t) / w;
      }
  }
  auto build_source = [&](bool with_F) {
    for (int n = 0; n < L; ++n) {
      const double t = grid.time(n);
      for (std::size_t k = 0; k < N; ++k) {
        const std::size_t i = static_cast<std::size_t>(n) * N + k;
        level[k] = boxG[i];
        if (with_F && !g.is_boundary(k)) level[k] += F.value(t, nodes[k], vnodes[i] + G[i]);
      }
      basis.forward(level, std::span<double>(src.data() + static_cast<std::size_t>(n) * M, M));
    }
  };
  auto rebuild_nodes = [&](std::vector<double>& out) {
    for (std::size_t i = 0; i < vcoef.size(); ++i) vcoef[i] += free[i];
    for (int n = 0; n < L; ++n)
      basis.backward(std::span<const double>(vcoef.data() + static_cast<std::size_t>(n) * M, M),
                     std::span<double>(out.data() + static_cast<std::size_t>(n) * N, N));
  };

  PicardResult res{WaveField(grid, false)};
  // Linear part first (F ignored), then Picard on the full map.
  build_source(false);
  duhamel(basis, src, L, dt, vcoef);
  rebuild_nodes(vnodes);
  std::vector<double> next(vnodes.size());
  double prev_diff = 0.0;
  bool converged = false;
  int it = 0;
  for (; it < options.max_iters; ++it) {
    build_source(true);
    duhamel(basis, src, L, dt, vcoef);
    rebuild_nodes(next);
    double diff = 0.0, vmax = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < next.size(); ++i) {
      finite = finite && std::isfinite(next[i]);
      diff = std::max(diff, std::abs(next[i] - vnodes[i]));
      vmax = std::max(vmax, std::abs(next[i]));
    }
    if (it == 0) res.first_correction_sup = diff;
    if (!finite) {
      throw Error(ErrorKind::divergence, "Picard iterates are not finite",
                  {{"contraction_ratio", prev_diff > 0 ? diff / prev_diff : 0.0}, {"iterations", it + 1}});
    }
    res.contraction_ratio = prev_diff > 0 ? diff / prev_diff : 0.0;
    prev_diff = diff;
    vnodes.swap(next);
    if (diff <= options.tol * std::max(vmax + gmax, 1e-300)) {
      converged = true;
      ++it;
      break;
    }
  }
  res.iterations = it;
  if (!converged)
    throw Error(ErrorKind::divergence, "Picard iteration did not converge",
                {{"contraction_ratio", res.contraction_ratio}, {"iterations", it}});

  // Source energy outside the kept modes at the fixed point.
  double tail = 0.0, total = 0.0;
  std::vector<double> back(N);
  for (int n = 0; n < L; ++n) {
    const double t = grid.time(n);
    for (std::size_t k = 0; k < N; ++k) {
      const std::size_t i = static_cast<std::size_t>(n) * N + k;
      level[k] = g.is_boundary(k) ? 0.0 : boxG[i] + F.value(t, nodes[k], vnodes[i] + G[i]);
    }
    basis.forward(level, coef);
    basis.backward(coef, back);
    for (std::size_t k = 0; k < N; ++k) {
      tail += (level[k] - back[k]) * (level[k] - back[k]);
      total += level[k] * level[k];
    }
  }
  res.tail_norm = total > 0 ? std::sqrt(tail / total) : 0.0;

  for (int n = 0; n < L; ++n) {
    auto out = res.u.real_level(n);
    for (std::size_t k = 0; k < N; ++k) {
      const std::size_t i = static_cast<std::size_t>(n) * N + k;
      out[k] = G[i] + (g.is_boundary(k) ? 0.0 : vnodes[i]);
    }
  }
  return res;
}

// --------------------------------------------------------- energy norms

EnergyNorms energy_norms(const WaveField& u, double p) {
  if (p < 1.0) throw Error(ErrorKind::config, "norm exponent must be at least 1");
  const SpaceTimeGrid& grid = u.grid();
  const SpatialGrid& g = grid.space();
  const std::size_t N = g.size();
  EnergyNorms e;
  std::vector<double> mag(N), pw(N), diff(N);
  double lp_acc = 0.0;
  for (int n = 0; n < grid.levels(); ++n) {
    double h1 = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      const double a = std::abs(u.at(n, k));
      mag[k] = a;
      pw[k] = std::pow(a, 2.0 * p);
    }
    h1 += g.l2_norm_sq(u.real_level(n)) + g.gradient_norm_sq(u.real_level(n));
    if (!u.is_real()) h1 += g.l2_norm_sq(u.imag_level(n)) + g.gradient_norm_sq(u.imag_level(n));
    e.c_h1 = std::max(e.c_h1, std::sqrt(h1));
    const double l2p = std::pow(g.integrate(pw), 1.0 / (2.0 * p));
    const double wt = grid.dt() * ((n == 0 || n == grid.levels() - 1) ? 0.5 : 1.0);
    lp_acc += wt * std::pow(l2p, p);
    if (n > 0) {
      double s = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        const double d = std::abs(u.at(n, k) - u.at(n - 1, k)) / grid.dt();
        diff[k] = d;
        s += g.weights()[k] * d * d;
      }
      e.c1_l2 = std::max(e.c1_l2, std::sqrt(s));
    }
  }
  e.lp_l2p = std::pow(lp_acc, 1.0 / p);
  return e;
}

}  // namespace wavenl
