#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavenl/error.hpp"
#include "wavenl/smooth.hpp"

namespace wavenl::detail {

namespace {

// Pads axis d of a row-major (n0, n1, n2) block; returns the new block.
std::vector<double> pad_axis(const std::vector<double>& in, std::array<int, 3> dims, int d,
                             const Axis& ax, int pad, int antipode_shift) {
  std::array<int, 3> od = dims;
  od[d] += 2 * pad;
  std::vector<double> out(static_cast<std::size_t>(od[0]) * od[1] * od[2]);
  auto src = [&](int i, int j, int k) {
    return in[(static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k];
  };
  const int n = dims[d];
  const int last = n - 1;
  auto clampi = [&](int i) { return std::clamp(i, 0, last); };
  for (int i = 0; i < od[0]; ++i)
    for (int j = 0; j < od[1]; ++j)
      for (int k = 0; k < od[2]; ++k) {
        std::array<int, 3> idx{i, j, k};
        const int p = idx[d] - pad;
        auto read = [&](int pp, int shift) {
          std::array<int, 3> s = idx;
          s[d] = pp;
          if (shift != 0) s[2] = ((s[2] + shift) % dims[2] + dims[2]) % dims[2];
          return src(s[0], s[1], s[2]);
        };
        double v;
        if (p >= 0 && p <= last) {
          v = read(p, 0);
        } else if (ax.ext == Ext::periodic) {
          v = read(((p % n) + n) % n, 0);
        } else if (ax.ext == Ext::polar && p < 0) {
          v = read(clampi(-p), antipode_shift);
        } else {
          // Cubic through the four samples nearest the end.
          const double y = p < 0 ? -p : p - last;
          auto node = [&](int r) { return read(p < 0 ? std::min(r, last) : std::max(last - r, 0), 0); };
          v = (y + 1) * (y + 2) * (y + 3) / 6.0 * node(0) - y * (y + 2) * (y + 3) / 2.0 * node(1) +
              y * (y + 1) * (y + 3) / 2.0 * node(2) - y * (y + 1) * (y + 2) / 6.0 * node(3);
        }
        out[(static_cast<std::size_t>(i) * od[1] + j) * od[2] + k] = v;
      }
  return out;
}

struct Tap {
  int first = 0;
  std::vector<double> w;
};

double wrap_angle(double th) {
  const double two_pi = 2.0 * std::numbers::pi;
  th = std::fmod(th, two_pi);
  return th < 0.0 ? th + two_pi : th;
}

}  // namespace

double Tensor3::index_of(int d, double x) const {
  const Axis& a = ax[d];
  if (a.ext == Ext::periodic) x = wrap_angle(x);
  return (x - a.origin) / a.h + a.pad;
}

Tensor3 potential_tensor(const Potential& q, std::array<int, 3> pads) {
  const SpaceTimeGrid& grid = q.grid();
  const SpatialGrid& g = grid.space();
  const auto c = g.cells();
  const auto sp = g.spacing();
  Tensor3 T;
  T.ax[0] = {grid.levels(), 0.0, grid.dt(), Ext::extrapolate, 0};
  std::vector<double> base;
  const std::size_t N = g.size();
  const auto& vals = q.values();
  switch (g.domain().kind()) {
    case DomainKind::interval:
      T.ax[1] = {c[0] + 1, 0.0, sp[0], Ext::extrapolate, 0};
      T.ax[2] = {1, 0.0, 1.0, Ext::extrapolate, 0};
      base = vals;
      break;
    case DomainKind::rectangle:
      T.ax[1] = {c[1] + 1, 0.0, sp[1], Ext::extrapolate, 0};
      T.ax[2] = {c[0] + 1, 0.0, sp[0], Ext::extrapolate, 0};
      base = vals;
      break;
    case DomainKind::disk: {
      const int nr = c[0], nth = c[1];
      T.ax[1] = {nr + 1, 0.0, sp[0], Ext::polar, 0};
      T.ax[2] = {nth, 0.0, sp[1], Ext::periodic, 0};
      base.resize(static_cast<std::size_t>(grid.levels()) * (nr + 1) * nth);
      for (int n = 0; n < grid.levels(); ++n)
        for (int i = 0; i <= nr; ++i)
          for (int j = 0; j < nth; ++j)
            base[(static_cast<std::size_t>(n) * (nr + 1) + i) * nth + j] =
                vals[static_cast<std::size_t>(n) * N + g.index(i, j)];
      break;
    }
  }
  if (T.ax[2].n == 1) pads[2] = 0;
  std::array<int, 3> dims{T.ax[0].n, T.ax[1].n, T.ax[2].n};
  for (int d = 0; d < 3; ++d) {
    if (pads[d] <= 0) continue;
    if (T.ax[d].ext == Ext::extrapolate && T.ax[d].n < 4)
      throw Error(ErrorKind::resolution, "extension needs four samples per axis", {{"axis", d}});
    base = pad_axis(base, dims, d, T.ax[d], pads[d], T.ax[2].n / 2);
    dims[d] += 2 * pads[d];
    T.ax[d].pad = pads[d];
  }
  T.v = std::move(base);
  return T;
}

std::vector<double> convolve(const Tensor3& T, std::array<double, 3> radius,
                             const std::array<std::vector<double>, 3>& out) {
  std::array<int, 3> dims{T.size(0), T.size(1), T.size(2)};
  std::vector<double> cur = T.v;
  for (int d = 0; d < 3; ++d) {
    const bool trivial = T.ax[d].n == 1;
    std::vector<Tap> taps(out[d].size());
    for (std::size_t o = 0; o < out[d].size(); ++o) {
      Tap& tap = taps[o];
      if (trivial) {
        tap.first = 0;
        tap.w = {1.0};
        continue;
      }
      const double c = T.index_of(d, out[d][o]);
      const double rr = radius[d] / T.ax[d].h;
      const int lo = static_cast<int>(std::ceil(c - rr));
      const int hi = static_cast<int>(std::floor(c + rr));
      if (lo < 0 || hi >= dims[d])
        throw Error(ErrorKind::resolution, "mollifier reaches past the padded samples",
                    {{"axis", d}});
      tap.first = lo;
      double sum = 0.0;
      for (int i = lo; i <= hi; ++i) {
        const double w = bump((i - c) / rr);
        tap.w.push_back(w);
        sum += w;
      }
      if (!(sum > 0.0))
        throw Error(ErrorKind::resolution, "mollifier narrower than the sample spacing",
                    {{"axis", d}});
      for (double& w : tap.w) w /= sum;
    }
    std::array<int, 3> od = dims;
    od[d] = static_cast<int>(out[d].size());
    std::vector<double> next(static_cast<std::size_t>(od[0]) * od[1] * od[2], 0.0);
    for (int i = 0; i < od[0]; ++i)
      for (int j = 0; j < od[1]; ++j)
        for (int k = 0; k < od[2]; ++k) {
          std::array<int, 3> idx{i, j, k};
          const Tap& tap = taps[static_cast<std::size_t>(idx[d])];
          double acc = 0.0;
          for (std::size_t m = 0; m < tap.w.size(); ++m) {
            std::array<int, 3> s = idx;
            s[d] = tap.first + static_cast<int>(m);
            acc += tap.w[m] * cur[(static_cast<std::size_t>(s[0]) * dims[1] + s[1]) * dims[2] + s[2]];
          }
          next[(static_cast<std::size_t>(i) * od[1] + j) * od[2] + k] = acc;
        }
    cur = std::move(next);
    dims = od;
  }
  return cur;
}

std::vector<double> cubic_sample(const Tensor3& T, const std::array<std::vector<double>, 3>& out) {
  // Per-axis Catmull-Rom stencils.
  std::array<std::vector<std::pair<int, std::array<double, 4>>>, 3> st;
  for (int d = 0; d < 3; ++d) {
    for (double x : out[d]) {
      if (T.ax[d].n == 1) {
        st[d].push_back({0, {1.0, 0.0, 0.0, 0.0}});
        continue;
      }
      const double c = T.index_of(d, x);
      const int i = static_cast<int>(std::floor(c));
      const double f = c - i;
      if (i - 1 < 0 || i + 2 >= T.size(d))
        throw Error(ErrorKind::range, "sample point outside the padded potential", {{"axis", d}});
      const double f2 = f * f, f3 = f2 * f;
      st[d].push_back({i - 1,
                       {-0.5 * f3 + f2 - 0.5 * f, 1.5 * f3 - 2.5 * f2 + 1.0,
                        -1.5 * f3 + 2.0 * f2 + 0.5 * f, 0.5 * f3 - 0.5 * f2}});
    }
  }
  const int kb = T.ax[2].n == 1 ? 1 : 4;
  std::vector<double> res(out[0].size() * out[1].size() * out[2].size());
  std::size_t o = 0;
  for (const auto& [i0, wi] : st[0])
    for (const auto& [j0, wj] : st[1])
      for (const auto& [k0, wk] : st[2]) {
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
          if (wi[a] == 0.0) continue;
          for (int b = 0; b < 4; ++b) {
            if (wj[b] == 0.0) continue;
            for (int c = 0; c < kb; ++c) acc += wi[a] * wj[b] * wk[c] * T.at(i0 + a, j0 + b, k0 + c);
          }
        }
        res[o++] = acc;
      }
  return res;
}

std::array<std::vector<double>, 3> grid_coordinates(const Potential& q) {
  const SpaceTimeGrid& grid = q.grid();
  const SpatialGrid& g = grid.space();
  const auto c = g.cells();
  const auto sp = g.spacing();
  std::array<std::vector<double>, 3> out;
  for (int n = 0; n < grid.levels(); ++n) out[0].push_back(grid.time(n));
  auto fill = [](std::vector<double>& v, int count, double h) {
    for (int i = 0; i < count; ++i) v.push_back(i * h);
  };
  switch (g.domain().kind()) {
    case DomainKind::interval:
      fill(out[1], c[0] + 1, sp[0]);
      out[2] = {0.0};
      break;
    case DomainKind::rectangle:
      fill(out[1], c[1] + 1, sp[1]);
      fill(out[2], c[0] + 1, sp[0]);
      break;
    case DomainKind::disk:
      fill(out[1], c[0] + 1, sp[0]);
      fill(out[2], c[1], sp[1]);
      break;
  }
  return out;
}

std::vector<double> to_grid_layout(const SpaceTimeGrid& grid, std::span<const double> tensor) {
  const SpatialGrid& g = grid.space();
  const std::size_t N = g.size();
  std::vector<double> out(static_cast<std::size_t>(grid.levels()) * N);
  if (g.domain().kind() != DomainKind::disk) {
    std::copy(tensor.begin(), tensor.end(), out.begin());
    return out;
  }
  const int nr = g.cells()[0], nth = g.cells()[1];
  for (int n = 0; n < grid.levels(); ++n) {
    const double* row = tensor.data() + static_cast<std::size_t>(n) * (nr + 1) * nth;
    double center = 0.0;
    for (int j = 0; j < nth; ++j) center += row[j];
    out[static_cast<std::size_t>(n) * N] = center / nth;
    for (int i = 1; i <= nr; ++i)
      for (int j = 0; j < nth; ++j)
        out[static_cast<std::size_t>(n) * N + g.index(i, j)] = row[static_cast<std::size_t>(i) * nth + j];
  }
  return out;
}

}  // namespace wavenl::detail
