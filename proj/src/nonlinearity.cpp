#include "wavenl/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <random>

#include "wavenl/error.hpp"

namespace wavenl {

const char* to_string(ClassTag tag) {
  switch (tag) {
    case ClassTag::A: return "A";
    case ClassTag::A_star: return "A_star";
    case ClassTag::unconstrained: return "unconstrained";
  }
  return "unknown";
}

double five_point(const std::function<double(double)>& g, double a) {
  const double h = 1e-5 * std::max(1.0, std::abs(a));
  return (g(a - 2 * h) - 8 * g(a - h) + 8 * g(a + h) - g(a + 2 * h)) / (12 * h);
}

double Nonlinearity::d_u(double t, Point x, double u) const {
  if (du) return du(t, x, u);
  return five_point([&](double v) { return eval(t, x, v); }, u);
}

double Nonlinearity::d_uu(double t, Point x, double u) const {
  if (duu) return duu(t, x, u);
  return five_point([&](double v) { return d_u(t, x, v); }, u);
}

double Nonlinearity::d_t(double t, Point x, double u) const {
  if (dt) return dt(t, x, u);
  return five_point([&](double s) { return eval(s, x, u); }, t);
}

double Nonlinearity::d_uuu(double t, Point x, double u) const {
  return five_point([&](double v) { return d_uu(t, x, v); }, u);
}

namespace catalog {

Nonlinearity zero() {
  Nonlinearity F;
  F.name = "zero";
  F.eval = [](double, Point, double) { return 0.0; };
  F.du = F.duu = F.dt = F.eval;
  F.growth_b = 2.0;
  F.growth_c1 = 1.0;
  F.class_tag = ClassTag::A;
  return F;
}

Nonlinearity linear(SpaceTimeFn m, double bound) {
  Nonlinearity F;
  F.name = "linear";
  F.eval = [m](double t, Point x, double u) { return m(t, x) * u; };
  F.du = [m](double t, Point x, double) { return m(t, x); };
  F.duu = [](double, Point, double) { return 0.0; };
  F.growth_b = 2.0;
  F.growth_c1 = bound;
  F.class_tag = ClassTag::A_star;
  return F;
}

Nonlinearity quadratic(SpaceTimeFn alpha, double bound) {
  Nonlinearity F;
  F.name = "quadratic";
  F.eval = [alpha](double t, Point x, double u) { return alpha(t, x) * u * u; };
  F.du = [alpha](double t, Point x, double u) { return 2.0 * alpha(t, x) * u; };
  F.duu = [alpha](double t, Point x, double) { return 2.0 * alpha(t, x); };
  F.growth_b = 2.0;
  F.growth_c1 = bound;
  F.class_tag = ClassTag::A_star;
  return F;
}

Nonlinearity cubic() {
  Nonlinearity F;
  F.name = "cubic";
  F.eval = [](double, Point, double u) { return u * u * u; };
  F.du = [](double, Point, double u) { return 3.0 * u * u; };
  F.duu = [](double, Point, double u) { return 6.0 * u; };
  F.dt = [](double, Point, double) { return 0.0; };
  F.growth_b = 3.0;
  F.growth_c1 = 10.0;
  F.class_tag = ClassTag::A_star;
  return F;
}

Nonlinearity blowup_quadratic() {
  Nonlinearity F;
  F.name = "blowup_quadratic";
  F.eval = [](double, Point, double u) { return -u * u; };
  F.du = [](double, Point, double u) { return -2.0 * u; };
  F.duu = [](double, Point, double) { return -2.0; };
  F.dt = [](double, Point, double) { return 0.0; };
  F.growth_b = 2.0;
  F.growth_c1 = 10.0;
  F.class_tag = ClassTag::A_star;
  return F;
}

Nonlinearity table(std::vector<double> breaks, std::vector<std::vector<double>> segments,
                   SpaceTimeFn modulation, double growth_b, double growth_c1) {
  if (breaks.empty() || segments.size() != breaks.size())
    throw Error(ErrorKind::config, "table needs one coefficient list per breakpoint");
  if (!std::is_sorted(breaks.begin(), breaks.end()))
    throw Error(ErrorKind::config, "table breakpoints must be increasing");
  struct Table {
    std::vector<double> breaks;
    std::vector<std::vector<double>> segs;
    // Polynomial derivative of order d at u.
    double eval(double u, int d) const {
      std::size_t i = static_cast<std::size_t>(
          std::upper_bound(breaks.begin(), breaks.end(), u) - breaks.begin());
      i = i == 0 ? 0 : i - 1;
      const double z = u - breaks[i];
      const auto& c = segs[i];
      double s = 0.0;
      for (std::size_t k = c.size(); k-- > static_cast<std::size_t>(d);) {
        double fac = 1.0;
        for (int r = 0; r < d; ++r) fac *= static_cast<double>(k) - r;
        s = s * z + c[k] * fac;
      }
      return s;
    }
  };
  auto tab = std::make_shared<Table>(Table{std::move(breaks), std::move(segments)});
  Nonlinearity F;
  F.name = "table";
  F.eval = [tab, modulation](double t, Point x, double u) { return modulation(t, x) * tab->eval(u, 0); };
  F.du = [tab, modulation](double t, Point x, double u) { return modulation(t, x) * tab->eval(u, 1); };
  F.duu = [tab, modulation](double t, Point x, double u) { return modulation(t, x) * tab->eval(u, 2); };
  F.growth_b = growth_b;
  F.growth_c1 = growth_c1;
  F.class_tag = ClassTag::unconstrained;
  return F;
}

}  // namespace catalog

// --------------------------------------------------------- class checks

namespace {

Point sample_point(const Domain& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  switch (d.kind()) {
    case DomainKind::interval: return {U(rng) * d.extent(0), 0.0};
    case DomainKind::rectangle: return {U(rng) * d.extent(0), U(rng) * d.extent(1)};
    case DomainKind::disk: {
      const double r = d.radius() * std::sqrt(U(rng));
      const double th = 2.0 * std::numbers::pi * U(rng);
      return {r * std::cos(th), r * std::sin(th)};
    }
  }
  return {};
}

Point sample_boundary(const Domain& d, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> face(0, d.face_count() - 1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int f = face(rng);
  return d.boundary_point(f, U(rng) * d.face_length(f));
}

void require_finite(double v, double t, Point x, double u) {
  if (!std::isfinite(v))
    throw Error(ErrorKind::evaluation, "non-finite nonlinearity evaluation",
                {{"t", t}, {"x", x.x}, {"y", x.y}, {"u", u}});
}

}  // namespace

ClassReport validate_class(const Nonlinearity& F, const Domain& domain, double T_prime,
                           std::array<double, 2> u_range, int samples, std::uint64_t seed,
                           double tol) {
  if (samples < 100) throw Error(ErrorKind::config, "validate_class needs at least 100 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> Ut(0.0, T_prime);
  std::uniform_real_distribution<double> Uu(u_range[0], u_range[1]);
  ClassReport rep;
  const double b = F.growth_b, c1 = F.growth_c1;
  auto consider = [&](double value, int j, double t, Point x, double u) {
    require_finite(value, t, x, u);
    const double bound = c1 * (1.0 + std::pow(std::abs(u), b - j));
    const double ratio = std::isfinite(bound) ? std::abs(value) / bound : 0.0;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_t = t;
      rep.worst_x = x;
      rep.worst_u = u;
      rep.worst_order = j;
    }
  };
  for (int s = 0; s < samples; ++s) {
    const double t = Ut(rng);
    const Point x = sample_point(domain, rng);
    // Include the range endpoints so large-|u| behavior is always probed.
    const double u = s == 0 ? u_range[0] : (s == 1 ? u_range[1] : Uu(rng));
    consider(F.value(t, x, u), 0, t, x, u);
    consider(F.d_u(t, x, u), 1, t, x, u);
    consider(F.d_uu(t, x, u), 2, t, x, u);
    consider(F.d_uuu(t, x, u), 3, t, x, u);
    consider(F.d_t(t, x, u), 0, t, x, u);
    const double hx = 1e-5 * std::max(1.0, domain.extent(0));
    const double dx = (F.value(t, {x.x + hx, x.y}, u) - F.value(t, {x.x - hx, x.y}, u)) / (2 * hx);
    consider(dx, 0, t, x, u);
  }
  rep.growth_ok = rep.worst_ratio <= 1.0;

  rep.classA_ok = true;
  rep.classAstar_ok = true;
  const int nb = std::max(16, samples / 10);
  for (int s = 0; s < nb; ++s) {
    const Point x = sample_boundary(domain, rng);
    const double u = s == 0 ? u_range[1] : Uu(rng);
    const double f0 = F.value(0.0, x, u), ft = F.d_t(0.0, x, u);
    require_finite(f0, 0.0, x, u);
    if (std::abs(f0) > tol || std::abs(ft) > tol) rep.classA_ok = false;
    const double g0 = F.value(0.0, x, 0.0), gt = F.d_t(0.0, x, 0.0);
    if (std::abs(g0) > tol || std::abs(gt) > tol) rep.classAstar_ok = false;
  }
  return rep;
}

// --------------------------------------------------------- data checks

DirichletData DirichletData::zero() { return constant(0.0); }

DirichletData DirichletData::constant(double lambda) {
  return {[lambda](double, Point) { return lambda; }, [lambda](Point) { return lambda; },
          [](Point) { return 0.0; }};
}

DirichletData DirichletData::scaled(double s) const {
  auto a = *this;
  return {[a, s](double t, Point x) { return s * a.f(t, x); },
          [a, s](Point x) { return s * a.u0(x); }, [a, s](Point x) { return s * a.u1(x); }};
}

DirichletData DirichletData::plus(const DirichletData& o, double s) const {
  auto a = *this;
  return {[a, o, s](double t, Point x) { return a.f(t, x) + s * o.f(t, x); },
          [a, o, s](Point x) { return a.u0(x) + s * o.u0(x); },
          [a, o, s](Point x) { return a.u1(x) + s * o.u1(x); }};
}

double DataReport::threshold(int k) const {
  static constexpr double factor[5] = {1.0, 1.0, 10.0, 10.0, 100.0};
  return tolerance * factor[k];
}

int DataReport::first_failure() const {
  for (int i = 0; i < 5; ++i)
    if (comp1[static_cast<std::size_t>(i)] > threshold(i)) return i;
  return -1;
}

namespace {

// Boundary sample points used for trace checks: every boundary node of the grid.
std::vector<Point> boundary_samples(const SpatialGrid& g) {
  std::vector<Point> pts;
  for (std::size_t k : g.boundary_indices()) pts.push_back(g.node(k));
  return pts;
}

// Squared H^m norm of f over [0, T'] x each boundary face, sampled on the
// grid's time step and face nodes.
double boundary_sobolev_sq(const BoundaryFn& f, const SpaceTimeGrid& grid, int m) {
  const SpatialGrid& g = grid.space();
  const Domain& d = g.domain();
  const double dt = grid.dt();
  const int nt = std::max(8, static_cast<int>(std::lround(grid.T_prime() / dt)));
  const double ht = grid.T_prime() / nt;
  double total = 0.0;
  for (int face = 0; face < d.face_count(); ++face) {
    std::vector<const BoundaryNode*> nodes;
    for (const auto& b : g.face_nodes())
      if (b.face == face) nodes.push_back(&b);
    const int ns = static_cast<int>(nodes.size());
    std::vector<double> v(static_cast<std::size_t>((nt + 1) * ns));
    for (int n = 0; n <= nt; ++n)
      for (int j = 0; j < ns; ++j)
        v[static_cast<std::size_t>(n * ns + j)] = f(n * ht, g.node(nodes[static_cast<std::size_t>(j)]->node));
    if (ns == 1) {
      total += lattice_sobolev_sq(v, {nt + 1}, {ht}, m);
    } else {
      const double hs = d.face_length(face) / (d.periodic_face() ? ns : ns - 1);
      total += lattice_sobolev_sq(v, {nt + 1, ns}, {ht, hs}, m);
    }
  }
  return total;
}

double spatial_sobolev_sq(const SpatialFn& u, const SpatialGrid& g, int m) {
  const Domain& d = g.domain();
  const auto c = g.cells();
  switch (d.kind()) {
    case DomainKind::interval: {
      std::vector<double> v(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) v[k] = u(g.node(k));
      return lattice_sobolev_sq(v, {c[0] + 1}, {g.spacing()[0]}, m);
    }
    case DomainKind::rectangle: {
      std::vector<double> v(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) v[k] = u(g.node(k));
      return lattice_sobolev_sq(v, {c[1] + 1, c[0] + 1}, {g.spacing()[1], g.spacing()[0]}, m);
    }
    case DomainKind::disk: {
      // (r, arc) lattice over the rings; the Jacobian is not included.
      std::vector<double> v(g.size() - 1);
      for (std::size_t k = 1; k < g.size(); ++k) v[k - 1] = u(g.node(k));
      return lattice_sobolev_sq(v, {c[0], c[1]}, {g.spacing()[0], d.radius() * g.spacing()[1]}, m);
    }
  }
  return 0.0;
}

}  // namespace

DataReport validate_data(const DirichletData& data, const SpaceTimeGrid& grid, double rel_tol) {
  if (!data.f || !data.u0 || !data.u1) throw Error(ErrorKind::shape, "data triple is incomplete");
  const SpatialGrid& g = grid.space();
  const Domain& d = g.domain();
  const double size = d.kind() == DomainKind::disk ? d.radius() : d.extent(0);
  const double tau = 1e-2 * std::min(grid.T_prime(), 1.0);
  const double hx = 1e-2 * size;
  DataReport rep;
  double scale = 1.0;
  for (const Point& p : boundary_samples(g)) {
    auto ft = [&](double t) { return data.f(t, p); };
    double dk[6];
    for (int k = 0; k <= 5; ++k) dk[k] = one_sided_derivative(ft, k, tau);
    const double lap0 = callable_laplacian(data.u0, d, p, hx);
    const double lap1 = callable_laplacian(data.u1, d, p, hx);
    const double bilap0 = callable_bilaplacian(data.u0, d, p, 0.5 * hx);
    const double targets[5] = {data.u0(p), data.u1(p), lap0, lap1, bilap0};
    for (int k = 0; k < 5; ++k) {
      scale = std::max({scale, std::abs(targets[k]), std::abs(dk[k])});
      rep.comp1[static_cast<std::size_t>(k)] =
          std::max(rep.comp1[static_cast<std::size_t>(k)], std::abs(dk[k] - targets[k]));
      rep.comp2[static_cast<std::size_t>(k)] =
          std::max(rep.comp2[static_cast<std::size_t>(k)], std::abs(dk[k]));
    }
  }
  rep.tolerance = rel_tol * scale;
  rep.comp1_ok = rep.first_failure() < 0;
  double init = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    init = std::max({init, std::abs(data.u0(g.node(k))), std::abs(data.u1(g.node(k)))});
  bool comp2 = true;
  for (int k = 0; k < 5; ++k) comp2 = comp2 && rep.comp2[static_cast<std::size_t>(k)] <= rep.threshold(k);
  rep.star_flag = comp2 && init <= rep.tolerance;

  rep.norm_low = std::sqrt(boundary_sobolev_sq(data.f, grid, 2) + spatial_sobolev_sq(data.u0, g, 2) +
                           spatial_sobolev_sq(data.u1, g, 1));
  rep.norm_high = std::sqrt(boundary_sobolev_sq(data.f, grid, 3) + spatial_sobolev_sq(data.u0, g, 3) +
                            spatial_sobolev_sq(data.u1, g, 2));
  return rep;
}

double default_lp_exponent(double b) { return std::max(b, 3.0 * (b - 1.0)) + 0.5; }

}  // namespace wavenl
