#include "wavenl/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tensor.hpp"
#include "wavenl/error.hpp"
#include "wavenl/numerics.hpp"
#include "wavenl/smooth.hpp"

namespace wavenl {

namespace {
constexpr Complex kI(0.0, 1.0);
}

double ProbeSpec::chi(double s) const { return flat_top(s, delta, 2.0 * delta); }
double ProbeSpec::chi1(double s) const { return flat_top(s, 2.5 * delta, 3.0 * delta); }

double ProbeSpec::phi(const Domain& d, double s) const {
  if (d.dimension() == 1) return 1.0;
  const double pw = plateau_width();
  return flat_top(d.tangential_offset(face, s, s0), pw, pw + delta);
}

double ProbeSpec::phi1(const Domain& d, double s) const {
  if (d.dimension() == 1) return 1.0;
  const double pw = plateau_width();
  return flat_top(d.tangential_offset(face, s, s0), pw + 1.5 * delta, pw + 2.0 * delta);
}

void validate_probe(const Domain& domain, const ProbeSpec& spec, double T) {
  if (!(spec.delta > 0.0)) throw Error(ErrorKind::config, "probe width must be positive");
  if (!(spec.t0 > 0.0 && spec.t0 < T))
    throw Error(ErrorKind::config, "probe time outside (0, T)", {{"t0", spec.t0}, {"T", T}});
  if (spec.face < 0 || spec.face >= domain.face_count())
    throw Error(ErrorKind::config, "probe face does not exist", {{"face", spec.face}});
  if (!(spec.rho > 1.0)) throw Error(ErrorKind::config, "rho must exceed 1", {{"rho", spec.rho}});
  const double eps = domain.collar_width();
  const double bound = std::min({eps, spec.t0, T - spec.t0}) / 16.0;
  if (!(spec.delta < bound)) {
    const ErrorKind kind = eps <= std::min(spec.t0, T - spec.t0) ? ErrorKind::collar : ErrorKind::config;
    throw Error(kind, "probe width violates delta < min(collar, t0, T - t0) / 16",
                {{"delta", spec.delta}, {"max_delta", bound}});
  }
  if (4.0 * spec.delta + 4.0 * spec.step() >= eps)
    throw Error(ErrorKind::collar, "amplitude support leaves the collar",
                {{"delta", spec.delta}, {"collar", eps}});
  if (domain.dimension() == 2) {
    const double reach = spec.plateau_width() + 2.0 * spec.delta;
    if (domain.kind() == DomainKind::rectangle) {
      if (spec.s0 - reach <= 0.0 || spec.s0 + reach >= domain.face_length(spec.face))
        throw Error(ErrorKind::config, "probe cutoff leaves its face",
                    {{"s0", spec.s0}, {"reach", reach}});
    } else if (reach >= std::numbers::pi * domain.radius()) {
      throw Error(ErrorKind::config, "probe cutoff wraps around the circle", {{"reach", reach}});
    }
    if (!spec.portion.empty()) {
      const BoundaryPortion& p = domain.portion(spec.portion);
      if (!domain.in_portion(p, spec.face, spec.s0 - reach) ||
          !domain.in_portion(p, spec.face, spec.s0 + reach) ||
          !domain.in_portion(p, spec.face, spec.s0))
        throw Error(ErrorKind::config, "probe cutoff leaves portion '" + p.name + "'");
    }
  } else if (!spec.portion.empty() && domain.portion(spec.portion).face != spec.face) {
    throw Error(ErrorKind::config, "probe face is not in portion '" + spec.portion + "'");
  }
}

ComplexBoundaryFn probe_boundary_fn(const Domain& domain, const ProbeSpec& spec) {
  const double tau = spec.t0 + spec.delta;
  const double size = domain.kind() == DomainKind::disk ? domain.radius() : domain.extent(0);
  const double tol = 1e-9 * std::max(1.0, size);
  return [domain, spec, tau, tol](double t, Point x) -> Complex {
    const FaceCoords fc = domain.face_coords(spec.face, x);
    if (std::abs(fc.depth) > tol) return {0.0, 0.0};
    const double tt = t <= tau ? t : 2.0 * tau - t;
    const double a = spec.chi(tt - spec.t0) * spec.phi(domain, fc.s);
    if (a == 0.0) return {0.0, 0.0};
    return std::polar(a, spec.rho * tt);
  };
}

LinearData probe_linear_data(const Domain& domain, const ProbeSpec& spec) {
  LinearData d;
  d.h = probe_boundary_fn(domain, spec);
  d.complex_valued = true;
  d.quiet_until = std::max(0.0, spec.t0 - 2.0 * spec.delta);
  return d;
}

// ------------------------------------------------------------- lattice

struct ProbeLattice {
  ProbeLattice(Domain d, ProbeSpec s) : domain(std::move(d)), spec(std::move(s)) {}
  Domain domain;
  ProbeSpec spec;
  std::uint64_t qhash = 0;
  double h = 0.0;
  double t_lo = 0.0;
  int Nt = 0, m_lo = -3, m_hi = 0, Ns = 1, K = 0;
  bool two = false;
  std::vector<Complex> a0, a1, a1r, a2, res;
  std::vector<double> q;

  int Nm() const { return m_hi - m_lo + 1; }
  std::size_t id(int i, int m, int k) const {
    return (static_cast<std::size_t>(i) * Nm() + (m - m_lo)) * Ns + k;
  }
  std::size_t count() const { return static_cast<std::size_t>(Nt) * Nm() * Ns; }
  double t(int i) const { return t_lo + i * h; }
  double s(int k) const { return spec.s0 + (k - K) * h; }
  double t_end() const { return spec.t0 + spec.delta; }
  double beta(double n) const {
    if (domain.kind() != DomainKind::disk) return 1.0;
    const double r = 1.0 - n / domain.radius();
    return r * r;
  }
  double lap_psi(double n) const {
    return domain.kind() == DomainKind::disk ? -1.0 / (domain.radius() - n) : 0.0;
  }
  int k_lo() const { return two ? 1 : 0; }
  int k_hi() const { return two ? Ns - 2 : 0; }

  Complex box(const std::vector<Complex>& f, int i, int m, int k) const {
    const double h2 = h * h, n = m * h;
    const Complex c = f[id(i, m, k)];
    const Complex up = f[id(i, m + 1, k)], dn = f[id(i, m - 1, k)];
    const Complex ftt = (f[id(i + 1, m, k)] - 2.0 * c + f[id(i - 1, m, k)]) / h2;
    Complex lap = (up - 2.0 * c + dn) / h2 + lap_psi(n) * (up - dn) / (2.0 * h);
    if (two) lap += (f[id(i, m, k + 1)] - 2.0 * c + f[id(i, m, k - 1)]) / (h2 * beta(n));
    return ftt - lap;
  }

  Complex transport(const std::vector<Complex>& f, int i, int m, int k) const {
    return (f[id(i + 1, m, k)] - f[id(i - 1, m, k)]) / h +
           (f[id(i, m + 1, k)] - f[id(i, m - 1, k)]) / h + lap_psi(m * h) * f[id(i, m, k)];
  }

  // A = (1/2) * integral of g along s1 from the boundary (trapezoid; one
  // diagonal step advances s1 by 2h). Rows below m_min stay zero.
  std::vector<Complex> integrate(const std::vector<Complex>& g, int m_min) const {
    std::vector<Complex> A(count(), Complex(0.0, 0.0));
    for (int k = 0; k < Ns; ++k) {
      for (int m = 1; m <= m_hi; ++m)
        for (int i = 1; i < Nt; ++i)
          A[id(i, m, k)] = A[id(i - 1, m - 1, k)] + 0.5 * h * (g[id(i - 1, m - 1, k)] + g[id(i, m, k)]);
      for (int m = -1; m >= m_min; --m)
        for (int i = 0; i + 1 < Nt; ++i)
          A[id(i, m, k)] = A[id(i + 1, m + 1, k)] - 0.5 * h * (g[id(i, m, k)] + g[id(i + 1, m + 1, k)]);
    }
    return A;
  }

  const std::vector<Complex>& field(int order) const {
    switch (order) {
      case 0: return a0;
      case 1: return a1;
      case 2: return a2;
      case 3: return a1r;
      default: throw Error(ErrorKind::config, "amplitude order must be 0..3");
    }
  }

  // Trilinear interpolation at fractional indices (m in row units).
  Complex interp(const std::vector<Complex>& f, double fi, double fm, double fk) const {
    const int i0 = static_cast<int>(std::floor(fi));
    const int m0 = static_cast<int>(std::floor(fm));
    const int k0 = two ? static_cast<int>(std::floor(fk)) : 0;
    if (i0 < 0 || i0 + 1 >= Nt || m0 < m_lo || m0 + 1 > m_hi) return {0.0, 0.0};
    if (two && (k0 < 0 || k0 + 1 >= Ns)) return {0.0, 0.0};
    const double wi = fi - i0, wm = fm - m0, wk = two ? fk - k0 : 0.0;
    Complex acc(0.0, 0.0);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < (two ? 2 : 1); ++c) {
          const double w = (a ? wi : 1.0 - wi) * (b ? wm : 1.0 - wm) * (two ? (c ? wk : 1.0 - wk) : 1.0);
          if (w != 0.0) acc += w * f[id(i0 + a, m0 + b, k0 + c)];
        }
    return acc;
  }

  // Lattice coordinates of a domain point: (depth, tangential offset index).
  bool locate(Point x, double& depth, double& fk) const {
    const FaceCoords fc = domain.face_coords(spec.face, x);
    depth = fc.depth;
    if (depth < -1e-12) return false;
    fk = two ? domain.tangential_offset(spec.face, fc.s, spec.s0) / h + K : 0.0;
    return true;
  }
};

namespace {

// Tensor coordinates (t, a, b) of the lattice rows, depths and tangentials.
struct TensorMap {
  bool depth_is_a = true;
  std::array<std::vector<double>, 3> out;
};

TensorMap tensor_map(const ProbeLattice& L) {
  const Domain& d = L.domain;
  TensorMap tm;
  for (int i = 0; i < L.Nt; ++i) tm.out[0].push_back(L.t(i));
  std::vector<double> depth, tang;
  const int face = L.spec.face;
  for (int m = L.m_lo; m <= L.m_hi; ++m) {
    const double n = m * L.h;
    switch (d.kind()) {
      case DomainKind::interval: depth.push_back(face == 0 ? n : d.extent(0) - n); break;
      case DomainKind::rectangle:
        if (face == 0) depth.push_back(n);
        else if (face == 1) depth.push_back(d.extent(0) - n);
        else if (face == 2) depth.push_back(d.extent(1) - n);
        else depth.push_back(n);
        break;
      case DomainKind::disk: depth.push_back(d.radius() - n); break;
    }
  }
  for (int k = 0; k < L.Ns; ++k) {
    if (!L.two) {
      tang.push_back(0.0);
      continue;
    }
    tang.push_back(d.kind() == DomainKind::disk ? L.s(k) / d.radius() : L.s(k));
  }
  tm.depth_is_a = !(d.kind() == DomainKind::rectangle && (face == 1 || face == 3));
  if (tm.depth_is_a) {
    tm.out[1] = depth;
    tm.out[2] = tang;
  } else {
    tm.out[1] = tang;
    tm.out[2] = depth;
  }
  return tm;
}

std::vector<double> to_lattice_order(const ProbeLattice& L, const TensorMap& tm,
                                     const std::vector<double>& tensor) {
  std::vector<double> out(L.count());
  const std::size_t na = tm.out[1].size(), nb = tm.out[2].size();
  for (int i = 0; i < L.Nt; ++i)
    for (int m = L.m_lo; m <= L.m_hi; ++m)
      for (int k = 0; k < L.Ns; ++k) {
        const std::size_t mi = static_cast<std::size_t>(m - L.m_lo), ki = static_cast<std::size_t>(k);
        const std::size_t a = tm.depth_is_a ? mi : ki, b = tm.depth_is_a ? ki : mi;
        out[L.id(i, m, k)] = tensor[(static_cast<std::size_t>(i) * na + a) * nb + b];
      }
  return out;
}

}  // namespace

GoProbe build_go_probe(const Domain& domain, const Potential& q, const ProbeSpec& spec) {
  const SpaceTimeGrid& qg = q.grid();
  validate_probe(domain, spec, qg.T());
  auto L = std::make_shared<ProbeLattice>(domain, spec);
  L->qhash = q.hash();
  L->h = spec.step();
  const double h = L->h, delta = spec.delta, rho = spec.rho;
  if (h > 2.0 * std::numbers::pi / (10.0 * rho))
    throw Error(ErrorKind::resolution, "lattice step does not resolve the phase",
                {{"max_rho", 2.0 * std::numbers::pi / (10.0 * h)}});
  L->two = domain.dimension() == 2;
  L->t_lo = spec.t0 - 3.0 * delta - 6.0 * h;
  L->Nt = static_cast<int>(std::ceil((4.0 * delta + 12.0 * h) / h)) + 1;
  L->m_hi = static_cast<int>(std::ceil(4.0 * delta / h)) + 4;
  if (L->two) {
    L->K = static_cast<int>(std::ceil((spec.plateau_width() + 2.0 * delta) / h)) + 3;
    L->Ns = 2 * L->K + 1;
  }
  const ProbeLattice& P = *L;
  const std::size_t count = P.count();

  // Potential and its mollification at the lattice nodes.
  const TensorMap tm = tensor_map(P);
  const double w = mollifier_width(rho, domain.dimension());
  detail::check_mollifier_resolution(qg, w);
  const auto radius = detail::kernel_radii(domain, w);
  const auto bare = detail::potential_tensor(q, {0, 0, 0});
  std::array<double, 3> excess{};
  for (int d = 0; d < 3; ++d) {
    const auto& ax = bare.ax[d];
    if (ax.ext == detail::Ext::periodic || ax.n == 1) continue;
    const auto [lo, hi] = std::minmax_element(tm.out[d].begin(), tm.out[d].end());
    excess[d] = std::max({0.0, ax.origin - *lo, *hi - (ax.origin + (ax.n - 1) * ax.h)});
  }
  const auto T = detail::potential_tensor(q, detail::mollifier_pads(bare, radius, excess));
  L->q = to_lattice_order(P, tm, detail::cubic_sample(T, tm.out));
  const std::vector<double> qr = to_lattice_order(P, tm, detail::convolve(T, radius, tm.out));

  // a0 = chi(s2) phi(s) beta^{-1/4}; characteristic variable s2 = t - n - t0
  // is taken from integer offsets so diagonals agree bit for bit.
  std::vector<double> chiphi(count, 0.0), b4(count, 1.0);
  L->a0.assign(count, Complex(0.0, 0.0));
  for (int i = 0; i < P.Nt; ++i)
    for (int m = P.m_lo; m <= P.m_hi; ++m)
      for (int k = 0; k < P.Ns; ++k) {
        const std::size_t j = P.id(i, m, k);
        const double s2 = (P.t_lo - spec.t0) + (i - m) * h;
        chiphi[j] = spec.chi(s2) * (P.two ? spec.phi(domain, P.s(k)) : 1.0);
        b4[j] = std::pow(P.beta(m * h), 0.25);
        L->a0[j] = chiphi[j] / b4[j];
      }

  auto interior = [&](int m_min, int m_max, auto&& fn) {
    for (int i = 1; i + 1 < P.Nt; ++i)
      for (int m = m_min; m <= m_max; ++m)
        for (int k = P.k_lo(); k <= P.k_hi(); ++k) fn(i, m, k, P.id(i, m, k));
  };

  // First order: (i/2) beta^{-1/4} (1/2) int (beta^{1/4} box a0 + chi phi q) ds1.
  std::vector<Complex> d1(count, Complex(0.0, 0.0));
  interior(P.m_lo + 1, P.m_hi - 1, [&](int i, int m, int k, std::size_t j) { d1[j] = P.box(P.a0, i, m, k); });
  auto first_order = [&](const std::vector<double>& qv) {
    std::vector<Complex> g(count, Complex(0.0, 0.0));
    interior(P.m_lo + 1, P.m_hi - 1, [&](int, int, int, std::size_t j) { g[j] = b4[j] * d1[j] + chiphi[j] * qv[j]; });
    std::vector<Complex> A = P.integrate(g, P.m_lo + 1);
    for (std::size_t j = 0; j < count; ++j) A[j] *= 0.5 * kI / b4[j];
    return A;
  };
  L->a1 = first_order(P.q);
  L->a1r = first_order(qr);

  // Second order from b = -(box + q) a1 built on the mollified potential.
  std::vector<Complex> g2(count, Complex(0.0, 0.0));
  interior(P.m_lo + 2, P.m_hi - 1, [&](int i, int m, int k, std::size_t j) {
    g2[j] = -b4[j] * (P.box(P.a1r, i, m, k) + P.q[j] * P.a1r[j]);
  });
  L->a2 = P.integrate(g2, P.m_lo + 2);
  for (std::size_t j = 0; j < count; ++j) L->a2[j] *= -0.5 * kI / b4[j];

  // Residual of the phase-free operator (box + q) + i rho (2 dt + 2 dn + lap psi)
  // at diagonal midpoints; the first-order part is the diagonal difference of
  // beta^{1/4} A so the transport cancellations hold exactly on the lattice.
  std::vector<Complex> At(count), N(count, Complex(0.0, 0.0));
  for (std::size_t j = 0; j < count; ++j) At[j] = P.a0[j] + P.a1[j] / rho + P.a2[j] / (rho * rho);
  interior(0, P.m_hi - 1, [&](int i, int m, int k, std::size_t j) { N[j] = P.box(At, i, m, k) + P.q[j] * At[j]; });
  L->res.assign(count, Complex(0.0, 0.0));
  for (int i = 2; i + 1 < P.Nt; ++i)
    for (int m = 1; m <= P.m_hi - 1; ++m)
      for (int k = P.k_lo(); k <= P.k_hi(); ++k) {
        const std::size_t j = P.id(i, m, k), jp = P.id(i - 1, m - 1, k);
        const double bmid = std::pow(P.beta((m - 0.5) * h), 0.25);
        const Complex dA = (b4[j] * At[j] - b4[jp] * At[jp]) / (2.0 * h);
        L->res[j] = 0.5 * (N[j] + N[jp]) + kI * rho * 4.0 * dA / bmid;
      }
  return GoProbe(std::move(L));
}

std::pair<GoProbe, GoProbe> build_probe(const Domain& domain, const Potential& q1,
                                        const Potential& q2, const ProbeSpec& spec) {
  return {build_go_probe(domain, q1, spec), build_go_probe(domain, q2, spec)};
}

// ---------------------------------------------------------- accessors

const ProbeSpec& GoProbe::spec() const { return lat_->spec; }
const Domain& GoProbe::domain() const { return lat_->domain; }
double GoProbe::lattice_step() const { return lat_->h; }
std::uint64_t GoProbe::potential_hash() const { return lat_->qhash; }

Complex GoProbe::amplitude(int order, double t, Point x) const {
  const ProbeLattice& L = *lat_;
  double depth = 0.0, fk = 0.0;
  if (!L.locate(x, depth, fk)) return {0.0, 0.0};
  return L.interp(L.field(order), (t - L.t_lo) / L.h, depth / L.h, fk);
}

Complex GoProbe::ansatz(double t, Point x) const {
  const ProbeLattice& L = *lat_;
  double depth = 0.0, fk = 0.0;
  if (!L.locate(x, depth, fk)) return {0.0, 0.0};
  const double fi = (t - L.t_lo) / L.h, fm = depth / L.h, r = L.spec.rho;
  const Complex A = L.interp(L.a0, fi, fm, fk) + L.interp(L.a1, fi, fm, fk) / r +
                    L.interp(L.a2, fi, fm, fk) / (r * r);
  return std::polar(1.0, r * (t - depth)) * A;
}

Complex GoProbe::boundary_data(double t, Point x) const {
  return probe_boundary_fn(lat_->domain, lat_->spec)(t, x);
}

Complex GoProbe::residual(double t, Point x) const {
  const ProbeLattice& L = *lat_;
  double depth = 0.0, fk = 0.0;
  if (!L.locate(x, depth, fk)) return {0.0, 0.0};
  // Midpoint (i, m) sits at (t_i - h/2, (m - 1/2) h).
  return L.interp(L.res, (t - L.t_lo) / L.h + 0.5, depth / L.h + 0.5, fk);
}

Complex GoProbe::inward_derivative(int order, double t, double s) const {
  const ProbeLattice& L = *lat_;
  const auto& f = L.field(order);
  const double fi = (t - L.t_lo) / L.h;
  const double fk = L.two ? L.domain.tangential_offset(L.spec.face, s, L.spec.s0) / L.h + L.K : 0.0;
  const Complex up = L.interp(f, fi, 1.0, fk), dn = L.interp(f, fi, -1.0, fk);
  return (up - dn) / (2.0 * L.h);
}

double GoProbe::boundary_max(int order) const {
  const ProbeLattice& L = *lat_;
  const auto& f = L.field(order);
  double mx = 0.0;
  for (int i = 0; i < L.Nt && L.t(i) <= L.t_end(); ++i)
    for (int k = 0; k < L.Ns; ++k) mx = std::max(mx, std::abs(f[L.id(i, 0, k)]));
  return mx;
}

double GoProbe::a2_h2_norm() const {
  const ProbeLattice& L = *lat_;
  int ni = 0;
  while (ni < L.Nt && L.t(ni) <= L.t_end()) ++ni;
  const int nm = L.m_hi + 1;
  std::vector<double> re, im;
  for (int i = 0; i < ni; ++i)
    for (int m = 0; m <= L.m_hi; ++m)
      for (int k = 0; k < L.Ns; ++k) {
        const Complex v = L.a2[L.id(i, m, k)];
        re.push_back(v.real());
        im.push_back(v.imag());
      }
  std::vector<int> dims{ni, nm};
  std::vector<double> hs{L.h, L.h};
  if (L.two) {
    dims.push_back(L.Ns);
    hs.push_back(L.h);
  }
  return std::sqrt(lattice_sobolev_sq(re, dims, hs, 2) + lattice_sobolev_sq(im, dims, hs, 2));
}

std::array<double, 3> GoProbe::transport_residuals() const {
  const ProbeLattice& L = *lat_;
  double r0 = 0.0, s0 = 0.0, r1 = 0.0, s1 = 0.0, r2 = 0.0, s2 = 0.0;
  for (int i = 1; i + 1 < L.Nt && L.t(i) <= L.t_end(); ++i)
    for (int m = 0; m + 1 <= L.m_hi - 1; ++m)
      for (int k = L.k_lo(); k <= L.k_hi(); ++k) {
        const std::size_t j = L.id(i, m, k);
        s0 = std::max(s0, std::abs(L.a0[j]));
        r0 = std::max(r0, std::abs(L.transport(L.a0, i, m, k)));
        const Complex f0 = L.box(L.a0, i, m, k) + L.q[j] * L.a0[j];
        s1 = std::max(s1, std::abs(f0));
        r1 = std::max(r1, std::abs(kI * L.transport(L.a1, i, m, k) + f0));
        const Complex f1 = L.box(L.a1r, i, m, k) + L.q[j] * L.a1r[j];
        s2 = std::max(s2, std::abs(f1));
        r2 = std::max(r2, std::abs(kI * L.transport(L.a2, i, m, k) + f1));
      }
  auto ratio = [](double r, double s) { return s > 0.0 ? r / s : r; };
  return {ratio(r0 * L.spec.delta, s0), ratio(r1, s1), ratio(r2, s2)};
}

double GoProbe::residual_l2() const {
  const ProbeLattice& L = *lat_;
  const double cell = std::pow(L.h, L.two ? 3 : 2);
  double sum = 0.0;
  for (int i = 2; i + 1 < L.Nt; ++i) {
    const double tm = L.t(i) - 0.5 * L.h;
    if (tm > L.t_end() || tm < 0.0) continue;
    for (int m = 1; m <= L.m_hi - 1; ++m) {
      const double area = std::sqrt(L.beta((m - 0.5) * L.h));
      for (int k = L.k_lo(); k <= L.k_hi(); ++k) sum += std::norm(L.res[L.id(i, m, k)]) * area * cell;
    }
  }
  return std::sqrt(sum);
}

AnsatzResidual ansatz_residual(const GoProbe& probe, const Potential& q) {
  if (q.hash() != probe.potential_hash())
    throw Error(ErrorKind::config, "probe was built for a different potential");
  AnsatzResidual r;
  r.l2_residual = probe.residual_l2();
  r.scaled = probe.rho() * r.l2_residual;
  return r;
}

RemainderResult solve_remainder(const GoProbe& probe, const Potential& q, const SpaceTimeGrid& grid) {
  if (q.hash() != probe.potential_hash())
    throw Error(ErrorKind::config, "probe was built for a different potential");
  const ProbeSpec& spec = probe.spec();
  const SpatialGrid& g = grid.space();
  if (g.domain().kind() != probe.domain().kind())
    throw Error(ErrorKind::config, "remainder grid is on a different domain");
  const double h = std::max(g.max_spacing(), grid.dt());
  const double rho = spec.rho;
  if (h > 2.0 * std::numbers::pi / (10.0 * rho))
    throw Error(ErrorKind::resolution, "grid does not resolve the phase",
                {{"max_rho", 2.0 * std::numbers::pi / (10.0 * h)}});
  const double t_end = spec.t0 + spec.delta;
  if (grid.T() < t_end) throw Error(ErrorKind::config, "grid horizon ends before t0 + delta");

  // Nodes inside the probe footprint.
  const Domain& dom = probe.domain();
  const double reach_n = 4.0 * spec.delta + 6.0 * probe.lattice_step();
  const double reach_s = spec.plateau_width() + 2.0 * spec.delta + 4.0 * probe.lattice_step();
  std::vector<std::size_t> foot;
  std::vector<double> psi;
  ActiveBox support;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.is_boundary(k)) continue;
    const FaceCoords fc = dom.face_coords(spec.face, g.node(k));
    if (fc.depth < 0.0 || fc.depth > reach_n) continue;
    if (dom.dimension() == 2 && std::abs(dom.tangential_offset(spec.face, fc.s, spec.s0)) > reach_s)
      continue;
    foot.push_back(k);
    psi.push_back(fc.depth);
    if (g.cartesian()) {
      const ActiveBox b = g.node_box(k);
      if (support.empty()) support = b;
      support.i0 = std::min(support.i0, b.i0);
      support.i1 = std::max(support.i1, b.i1);
      support.j0 = std::min(support.j0, b.j0);
      support.j1 = std::max(support.j1, b.j1);
    }
  }
  if (!g.cartesian()) support = g.full_box();
  const double t_start = spec.t0 - 3.0 * spec.delta - 6.0 * probe.lattice_step();

  LinearData data;
  data.complex_valued = true;
  data.quiet_until = std::max(0.0, t_start);
  data.source = [&](int n, std::span<double> re, std::span<double> im, ActiveBox& box) {
    const double t = grid.time(n);
    if (t < t_start || t > t_end || foot.empty()) return false;
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (std::size_t j = 0; j < foot.size(); ++j) {
      const std::size_t k = foot[j];
      const Complex v = -probe.residual(t, g.node(k)) * std::polar(1.0, rho * (t - psi[j]));
      re[k] = v.real();
      im[k] = v.imag();
    }
    box = support;
    return true;
  };
  RemainderResult out{solve_linear(q, data, grid), 0.0, 0.0};

  int last = 0;
  while (last + 1 < grid.levels() && grid.time(last + 1) <= t_end + 1e-12) ++last;
  double sum = 0.0;
  for (int f = 0; f < dom.face_count(); ++f) {
    const BoundaryPortion whole{"face", f, 0.0, dom.face_length(f)};
    const BoundaryTrace tr = normal_derivative_trace(out.R, whole);
    for (int n = 0; n <= last; ++n) {
      const double wt = grid.dt() * ((n == 0 || n == last) ? 0.5 : 1.0);
      for (std::size_t j = 0; j < tr.width(); ++j) sum += wt * tr.tangential_weight(j) * std::norm(tr.at(n, j));
    }
  }
  out.trace_norm = std::sqrt(sum);
  out.scaled_trace = rho * out.trace_norm;
  return out;
}

}  // namespace wavenl
