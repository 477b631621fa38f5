#include "wavenl/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <thread>

#include <Eigen/Dense>

#include "wavenl/error.hpp"

namespace wavenl {

std::vector<double> fd_weights(double x0, std::span<const double> xs, int m) {
  const int n = static_cast<int>(xs.size()) - 1;
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) w[static_cast<std::size_t>(i)] = c[i][m];
  return w;
}

double one_sided_derivative(const std::function<double(double)>& g, int m, double h) {
  if (m == 0) return g(0.0);
  const int npts = m + 4;
  std::vector<double> xs(static_cast<std::size_t>(npts));
  for (int i = 0; i < npts; ++i) xs[static_cast<std::size_t>(i)] = i * h;
  const auto w = fd_weights(0.0, xs, m);
  // Weights sum to zero; differencing against g(0) keeps constants exact.
  const double g0 = g(0.0);
  double s = 0.0;
  for (int i = 1; i < npts; ++i) s += w[static_cast<std::size_t>(i)] * (g(xs[static_cast<std::size_t>(i)]) - g0);
  return s;
}

namespace {

void forward_difference(std::vector<double>& v, std::vector<int>& dims, std::size_t axis,
                        double h) {
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < dims.size(); ++a) inner *= static_cast<std::size_t>(dims[a]);
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(dims[a]);
  const std::size_t n = static_cast<std::size_t>(dims[axis]);
  std::vector<double> out(outer * (n - 1) * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t k = 0; k < inner; ++k)
        out[(o * (n - 1) + i) * inner + k] =
            (v[(o * n + i + 1) * inner + k] - v[(o * n + i) * inner + k]) / h;
  v.swap(out);
  dims[axis] -= 1;
}

void multi_indices(std::size_t dims, int order, std::vector<int>& cur, std::size_t axis,
                   std::vector<std::vector<int>>& out) {
  if (axis == dims) {
    out.push_back(cur);
    return;
  }
  int used = 0;
  for (std::size_t a = 0; a < axis; ++a) used += cur[a];
  for (int k = 0; k + used <= order; ++k) {
    cur[axis] = k;
    multi_indices(dims, order, cur, axis + 1, out);
  }
  cur[axis] = 0;
}

}  // namespace

double lattice_sobolev_sq(std::span<const double> v, const std::vector<int>& dims,
                          const std::vector<double>& h, int order) {
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  if (total != v.size() || dims.size() != h.size())
    throw Error(ErrorKind::shape, "lattice shape does not match samples");
  double cell = 1.0;
  for (double x : h) cell *= x;
  std::vector<std::vector<int>> alphas;
  std::vector<int> cur(dims.size(), 0);
  multi_indices(dims.size(), order, cur, 0, alphas);
  double sum = 0.0;
  for (const auto& alpha : alphas) {
    std::vector<double> w(v.begin(), v.end());
    std::vector<int> d = dims;
    bool ok = true;
    for (std::size_t a = 0; a < dims.size() && ok; ++a)
      for (int r = 0; r < alpha[a]; ++r) {
        if (d[a] < 2) {
          ok = false;
          break;
        }
        forward_difference(w, d, a, h[a]);
      }
    if (!ok) continue;
    double s = 0.0;
    for (double x : w) s += x * x;
    sum += s * cell;
  }
  return sum;
}

double callable_bilaplacian(const SpatialFn& fn, const Domain& domain, Point p, double h) {
  // Least-squares polynomial fit on in-domain lattice points around p, in
  // coordinates scaled by h; the bilaplacian is read off the quartic terms.
  const bool two = domain.dimension() == 2;
  const int K = two ? 10 : 12;
  const int degree = 8;
  std::vector<std::pair<int, int>> powers;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; b <= (two ? degree - a : 0); ++b) powers.emplace_back(a, b);
  std::vector<std::array<double, 2>> pts;
  std::vector<double> vals;
  const double centre = fn(p);
  for (int i = -K; i <= K; ++i)
    for (int j = (two ? -K : 0); j <= (two ? K : 0); ++j) {
      const Point q{p.x + i * h, p.y + j * h};
      if (!domain.contains(q, 0.0)) continue;
      pts.push_back({static_cast<double>(i), static_cast<double>(j)});
      vals.push_back(fn(q) - centre);
    }
  if (pts.size() < powers.size() + 4)
    throw Error(ErrorKind::evaluation, "bilaplacian stencil has too few in-domain points");
  Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(powers.size()));
  Eigen::VectorXd b(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t r = 0; r < pts.size(); ++r) {
    for (std::size_t c = 0; c < powers.size(); ++c)
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::pow(pts[r][0], powers[c].first) * std::pow(pts[r][1], powers[c].second);
    b[static_cast<Eigen::Index>(r)] = vals[r];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
  double s = 0.0;
  for (std::size_t c = 0; c < powers.size(); ++c) {
    const auto [a, e] = powers[c];
    const double v = coef[static_cast<Eigen::Index>(c)];
    if (a == 4 && e == 0) s += 24 * v;
    if (a == 0 && e == 4) s += 24 * v;
    if (a == 2 && e == 2) s += 8 * v;
  }
  return s / std::pow(h, 4);
}

double callable_laplacian(const SpatialFn& fn, const Domain& domain, Point p, double h) {
  static const double c5[] = {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12};
  auto centered = [&](Point dir) {
    double s = 0.0;
    for (int m = -2; m <= 2; ++m) s += c5[m + 2] * fn({p.x + m * h * dir.x, p.y + m * h * dir.y});
    return s / (h * h);
  };
  // Second and first derivatives along `dir` from p, p+h dir, ..., fourth order.
  static const std::vector<double> w2 = [] {
    std::vector<double> xs{0, 1, 2, 3, 4, 5};
    return fd_weights(0.0, xs, 2);
  }();
  static const std::vector<double> w1 = [] {
    std::vector<double> xs{0, 1, 2, 3, 4};
    return fd_weights(0.0, xs, 1);
  }();
  auto one_sided = [&](Point dir, const std::vector<double>& w, int order) {
    double s = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m)
      s += w[m] * fn({p.x + static_cast<double>(m) * h * dir.x, p.y + static_cast<double>(m) * h * dir.y});
    return s / std::pow(h, order);
  };
  auto axis_term = [&](Point dir) {
    const Point a{p.x + 2 * h * dir.x, p.y + 2 * h * dir.y};
    const Point b{p.x - 2 * h * dir.x, p.y - 2 * h * dir.y};
    const bool fa = domain.contains(a, 0.0), fb = domain.contains(b, 0.0);
    if (fa && fb) return centered(dir);
    if (fa) return one_sided(dir, w2, 2);
    return one_sided({-dir.x, -dir.y}, w2, 2);
  };
  switch (domain.kind()) {
    case DomainKind::interval: return axis_term({1, 0});
    case DomainKind::rectangle: return axis_term({1, 0}) + axis_term({0, 1});
    case DomainKind::disk: {
      const double r = std::hypot(p.x, p.y);
      if (domain.radius() - r > 3.0 * h) return axis_term({1, 0}) + axis_term({0, 1});
      // Polar form: u_rr + u_r / r + u_theta_theta / r^2, radial stencil inward.
      const Point inward{-p.x / r, -p.y / r};
      const double urr = one_sided(inward, w2, 2);
      const double ur = -one_sided(inward, w1, 1);
      const double th = std::atan2(p.y, p.x);
      const double dth = h / r;
      double utt = 0.0;
      for (int m = -2; m <= 2; ++m)
        utt += c5[m + 2] * fn({r * std::cos(th + m * dth), r * std::sin(th + m * dth)});
      utt /= dth * dth;
      return urr + ur / r + utt / (r * r);
    }
  }
  return 0.0;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace wavenl
