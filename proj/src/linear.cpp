#include "wavenl/linear.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wavenl/error.hpp"

namespace wavenl {

// ------------------------------------------------------------- Potential

Potential::Potential(SpaceTimeGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(grid_.levels()) * grid_.space().size())
    throw Error(ErrorKind::shape, "potential samples do not match grid");
  zero_ = true;
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::evaluation, "non-finite potential sample");
    if (v != 0.0) zero_ = false;
  }
}

Potential Potential::sample(const SpaceTimeGrid& grid, const SpaceTimeFn& fn) {
  const std::size_t N = grid.space().size();
  std::vector<double> v(static_cast<std::size_t>(grid.levels()) * N);
  for (int n = 0; n < grid.levels(); ++n)
    for (std::size_t k = 0; k < N; ++k)
      v[static_cast<std::size_t>(n) * N + k] = fn(grid.time(n), grid.space().node(k));
  return Potential(grid, std::move(v));
}

Potential Potential::constant(const SpaceTimeGrid& grid, double c) {
  return Potential(grid, std::vector<double>(static_cast<std::size_t>(grid.levels()) *
                                                 grid.space().size(), c));
}

std::span<const double> Potential::level(int n) const {
  const std::size_t N = grid_.space().size();
  return {values_.data() + static_cast<std::size_t>(n) * N, N};
}

namespace {
void bracket(const SpaceTimeGrid& g, double t, int& n, double& w) {
  double f = std::clamp(t / g.dt(), 0.0, static_cast<double>(g.steps()));
  n = std::min(static_cast<int>(std::floor(f)), g.steps() - 1);
  w = f - n;
}
}  // namespace

double Potential::at(double t, Point x) const {
  if (zero_) return 0.0;
  int n;
  double w;
  bracket(grid_, t, n, w);
  const double a = grid_.space().interpolate(level(n), x);
  if (w == 0.0) return a;
  return (1 - w) * a + w * grid_.space().interpolate(level(n + 1), x);
}

void Potential::sample_level(const SpatialGrid& target, double t, std::span<double> out) const {
  if (zero_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  int n;
  double w;
  bracket(grid_, t, n, w);
  const bool same = target.domain().kind() == grid_.space().domain().kind() &&
                    target.cells() == grid_.space().cells();
  auto a = level(n), b = level(n + 1);
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (same) {
      out[k] = (1 - w) * a[k] + w * b[k];
    } else {
      const Point p = target.node(k);
      const double va = grid_.space().interpolate(a, p);
      out[k] = w == 0.0 ? va : (1 - w) * va + w * grid_.space().interpolate(b, p);
    }
  }
}

Potential Potential::resample(const SpaceTimeGrid& target) const {
  const std::size_t N = target.space().size();
  std::vector<double> v(static_cast<std::size_t>(target.levels()) * N);
  for (int n = 0; n < target.levels(); ++n)
    sample_level(target.space(), target.time(n),
                 std::span<double>(v.data() + static_cast<std::size_t>(n) * N, N));
  return Potential(target, std::move(v));
}

double Potential::sup() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

LatticeShape lattice_shape(const SpaceTimeGrid& grid) {
  const SpatialGrid& g = grid.space();
  const auto c = g.cells();
  switch (g.domain().kind()) {
    case DomainKind::interval: return {{grid.levels(), c[0] + 1}, {grid.dt(), g.spacing()[0]}};
    case DomainKind::rectangle:
      return {{grid.levels(), c[1] + 1, c[0] + 1}, {grid.dt(), g.spacing()[1], g.spacing()[0]}};
    case DomainKind::disk:
      return {{grid.levels(), c[0], c[1]},
              {grid.dt(), g.spacing()[0], g.domain().radius() * g.spacing()[1]}};
  }
  return {};
}

std::vector<double> to_lattice(const SpaceTimeGrid& grid, std::span<const double> values) {
  if (grid.space().domain().kind() != DomainKind::disk)
    return std::vector<double>(values.begin(), values.end());
  // Drop the center node; rings then form an (r, theta) tensor lattice.
  const std::size_t N = grid.space().size();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(grid.levels()) * (N - 1));
  for (int n = 0; n < grid.levels(); ++n)
    for (std::size_t k = 1; k < N; ++k) out.push_back(values[static_cast<std::size_t>(n) * N + k]);
  return out;
}

double Potential::hl_norm(int order) const {
  const auto shape = lattice_shape(grid_);
  return std::sqrt(lattice_sobolev_sq(to_lattice(grid_, values_), shape.dims, shape.h, order));
}

double Potential::h2_norm() const { return hl_norm(2); }

std::uint64_t Potential::hash() const {
  std::uint64_t h = fnv1a(values_.data(), values_.size() * sizeof(double));
  const auto c = grid_.space().cells();
  const int dims[3] = {c[0], c[1], grid_.steps()};
  return fnv1a(dims, sizeof(dims), h);
}

// ------------------------------------------------------------ LinearData

LinearData LinearData::from_real(const DirichletData& d) {
  LinearData out;
  if (d.f) out.h = [f = d.f](double t, Point x) { return Complex(f(t, x), 0.0); };
  if (d.u0) out.h0 = [u = d.u0](Point x) { return Complex(u(x), 0.0); };
  if (d.u1) out.h1 = [u = d.u1](Point x) { return Complex(u(x), 0.0); };
  return out;
}

// ---------------------------------------------------------------- march

namespace {

void grow(ActiveBox& box, const ActiveBox& other) {
  if (other.empty()) return;
  if (box.empty()) {
    box = other;
    return;
  }
  box.i0 = std::min(box.i0, other.i0);
  box.i1 = std::max(box.i1, other.i1);
  box.j0 = std::min(box.j0, other.j0);
  box.j1 = std::max(box.j1, other.j1);
}

ActiveBox expand(const SpatialGrid& g, ActiveBox b) {
  if (b.empty()) return b;
  const auto c = g.cells();
  b.i0 = std::max(0, b.i0 - 1);
  b.i1 = std::min(c[0], b.i1 + 1);
  if (g.domain().kind() == DomainKind::rectangle) {
    b.j0 = std::max(0, b.j0 - 1);
    b.j1 = std::min(c[1], b.j1 + 1);
  }
  return b;
}

}  // namespace

void march_linear(const Potential* q, const LinearData& data, const SpaceTimeGrid& grid,
                  const LevelObserver& observe) {
  const SpatialGrid& g = grid.space();
  const std::size_t N = g.size();
  const int nt = grid.steps();
  const double dt = grid.dt(), dt2 = dt * dt;
  const bool cplx = data.complex_valued;
  const bool use_q = q != nullptr && !q->is_zero();
  const bool has_init = static_cast<bool>(data.h0) || static_cast<bool>(data.h1);

  struct Buffers {
    std::vector<double> prev, cur, next, src;
  };
  Buffers re{std::vector<double>(N), std::vector<double>(N), std::vector<double>(N), {}};
  Buffers im;
  if (cplx) im = {std::vector<double>(N), std::vector<double>(N), std::vector<double>(N), {}};
  std::vector<double> qlev(use_q ? N : 0);
  const bool has_src = static_cast<bool>(data.source);
  if (has_src) {
    re.src.assign(N, 0.0);
    if (cplx) im.src.assign(N, 0.0);
  }
  std::vector<double> empty;
  auto emit = [&](int n, const std::vector<double>& r, const std::vector<double>& i) {
    observe(n, r, cplx ? std::span<const double>(i) : std::span<const double>(empty));
  };

  // Levels before the data wakes up are exactly zero.
  int start = 0;
  if (!has_init && data.quiet_until > 0.0)
    start = std::clamp(static_cast<int>(std::floor(data.quiet_until / dt)) - 2, 0, nt);
  for (int n = 0; n < start; ++n) emit(n, re.cur, im.cur);

  ActiveBox box;
  const bool cart = g.cartesian();
  auto set_boundary = [&](int n, std::vector<double>& r, std::vector<double>* i) {
    const double t = grid.time(n);
    for (std::size_t k : g.boundary_indices()) {
      const Complex v = data.h ? data.h(t, g.node(k)) : Complex(0.0, 0.0);
      r[k] = v.real();
      if (i) (*i)[k] = v.imag();
      if (cart && (v.real() != 0.0 || v.imag() != 0.0)) grow(box, g.node_box(k));
    }
  };
  auto load_source = [&](int n) -> bool {
    if (!has_src) return false;
    ActiveBox support;
    std::span<double> imspan = cplx ? std::span<double>(im.src) : std::span<double>();
    const bool nz = data.source(n, re.src, imspan, support);
    if (nz && cart) grow(box, support);
    return nz;
  };
  auto load_q = [&](int n) {
    if (use_q) q->sample_level(g, grid.time(n), qlev);
  };

  // Level `start`: initial data at t = 0, zero otherwise.
  if (start == 0 && has_init) {
    for (std::size_t k = 0; k < N; ++k) {
      const Point p = g.node(k);
      const Complex v = data.h0 ? data.h0(p) : Complex(0.0, 0.0);
      re.cur[k] = v.real();
      if (cplx) im.cur[k] = v.imag();
    }
    if (cart) box = g.full_box();
  }
  set_boundary(start, re.cur, cplx ? &im.cur : nullptr);
  emit(start, re.cur, im.cur);
  if (start == nt) return;

  // First step: second-order Taylor start.
  {
    std::vector<double> lap(N);
    load_q(start);
    const bool src_nz = load_source(start);
    auto taylor = [&](Buffers& B, bool imag_part) {
      g.laplacian(B.cur, lap);
      for (std::size_t k = 0; k < N; ++k) {
        double v1 = 0.0;
        if (start == 0 && data.h1) {
          const Complex c = data.h1(g.node(k));
          v1 = imag_part ? c.imag() : c.real();
        }
        double acc = lap[k];
        if (use_q) acc -= qlev[k] * B.cur[k];
        if (src_nz) acc += B.src[k];
        B.next[k] = B.cur[k] + dt * v1 + 0.5 * dt2 * acc;
      }
    };
    taylor(re, false);
    if (cplx) taylor(im, true);
    set_boundary(start + 1, re.next, cplx ? &im.next : nullptr);
    std::swap(re.prev, re.cur);
    std::swap(re.cur, re.next);
    if (cplx) {
      std::swap(im.prev, im.cur);
      std::swap(im.cur, im.next);
    }
    if (cart && !box.empty()) box = expand(g, box);
    emit(start + 1, re.cur, im.cur);
  }

  for (int n = start + 1; n < nt; ++n) {
    load_q(n);
    const bool src_nz = load_source(n);
    const ActiveBox work = cart ? expand(g, box) : g.full_box();
    if (!cart || !work.empty()) {
      g.leapfrog_update(re.prev.data(), re.cur.data(), re.next.data(), use_q ? qlev.data() : nullptr,
                        src_nz ? re.src.data() : nullptr, dt2, work);
      if (cplx)
        g.leapfrog_update(im.prev.data(), im.cur.data(), im.next.data(),
                          use_q ? qlev.data() : nullptr, src_nz ? im.src.data() : nullptr, dt2,
                          work);
    }
    if (cart) box = work;
    set_boundary(n + 1, re.next, cplx ? &im.next : nullptr);
    std::swap(re.prev, re.cur);
    std::swap(re.cur, re.next);
    if (cplx) {
      std::swap(im.prev, im.cur);
      std::swap(im.cur, im.next);
    }
    emit(n + 1, re.cur, im.cur);
  }
}

WaveField solve_linear(const Potential& q, const LinearData& data, const SpaceTimeGrid& grid) {
  WaveField w(grid, data.complex_valued);
  march_linear(&q, data, grid, [&](int n, std::span<const double> re, std::span<const double> im) {
    std::copy(re.begin(), re.end(), w.real_level(n).begin());
    if (!im.empty()) std::copy(im.begin(), im.end(), w.imag_level(n).begin());
  });
  return w;
}

namespace {

BoundaryTrace empty_trace(const SpaceTimeGrid& grid, const BoundaryPortion& portion) {
  BoundaryTrace tr;
  tr.portion = portion;
  tr.dt = grid.dt();
  tr.levels = grid.levels();
  tr.nodes = grid.space().portion_nodes(portion);
  tr.values.assign(static_cast<std::size_t>(tr.levels) * tr.nodes.size(), Complex(0.0, 0.0));
  return tr;
}

void record_trace(BoundaryTrace& tr, const SpatialGrid& g, int n, std::span<const double> re,
                  std::span<const double> im) {
  for (std::size_t j = 0; j < tr.width(); ++j) {
    const auto& b = tr.nodes[j];
    const double r = g.outward_derivative(re, b);
    const double i = im.empty() ? 0.0 : g.outward_derivative(im, b);
    tr.at(n, j) = Complex(r, i);
  }
}

DtnResult dtn_impl(const Potential* q, const LinearData& data, const SpaceTimeGrid& grid,
                   const BoundaryPortion& portion, DtnMode mode) {
  if (mode == DtnMode::lateral_only && (data.h0 || data.h1)) {
    bool nonzero = false;
    for (std::size_t k = 0; k < grid.space().size() && !nonzero; ++k) {
      const Point p = grid.space().node(k);
      if ((data.h0 && std::abs(data.h0(p)) != 0.0) || (data.h1 && std::abs(data.h1(p)) != 0.0))
        nonzero = true;
    }
    if (nonzero)
      throw Error(ErrorKind::config, "lateral-only measurements require zero initial data");
  }
  DtnResult res{empty_trace(grid, portion), std::nullopt, std::nullopt};
  const SpatialGrid& g = grid.space();
  const std::size_t N = g.size();
  const int nt = grid.steps();
  std::vector<Complex> w_nm2(N), w_nm1(N), w_n(N);
  march_linear(q, data, grid, [&](int n, std::span<const double> re, std::span<const double> im) {
    record_trace(res.trace, g, n, re, im);
    if (mode == DtnMode::with_final_state && n >= nt - 2) {
      auto& dst = n == nt ? w_n : (n == nt - 1 ? w_nm1 : w_nm2);
      for (std::size_t k = 0; k < N; ++k) dst[k] = Complex(re[k], im.empty() ? 0.0 : im[k]);
    }
  });
  if (mode == DtnMode::with_final_state) {
    std::vector<Complex> wt(N);
    const double dt = grid.dt();
    for (std::size_t k = 0; k < N; ++k) wt[k] = (3.0 * w_n[k] - 4.0 * w_nm1[k] + w_nm2[k]) / (2.0 * dt);
    res.final_w = std::move(w_n);
    res.final_wt = std::move(wt);
  }
  return res;
}

}  // namespace

BoundaryTrace normal_derivative_trace(const WaveField& w, const BoundaryPortion& portion) {
  const auto& grid = w.grid();
  bool on_boundary = portion.face >= 0 && portion.face < grid.domain().face_count();
  if (!on_boundary) throw Error(ErrorKind::geometry, "portion is not on the boundary");
  BoundaryTrace tr = empty_trace(grid, portion);
  for (int n = 0; n < grid.levels(); ++n)
    record_trace(tr, grid.space(), n, w.real_level(n),
                 w.is_real() ? std::span<const double>() : w.imag_level(n));
  return tr;
}

DtnResult dtn_apply(const Potential& q, const LinearData& data, const SpaceTimeGrid& grid,
                    const BoundaryPortion& portion, DtnMode mode) {
  return dtn_impl(&q, data, grid, portion, mode);
}

DtnResult dtn_apply_free(const LinearData& data, const SpaceTimeGrid& grid,
                         const BoundaryPortion& portion, DtnMode mode) {
  return dtn_impl(nullptr, data, grid, portion, mode);
}

double h1_norm(const SpatialGrid& g, std::span<const Complex> w) {
  std::vector<double> re(g.size()), im(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    re[k] = w[k].real();
    im[k] = w[k].imag();
  }
  return std::sqrt(g.l2_norm_sq(re) + g.l2_norm_sq(im) + g.gradient_norm_sq(re) +
                   g.gradient_norm_sq(im));
}

// ------------------------------------------------------------ DtnMatrix

void DtnMatrix::save(const std::filesystem::path& stem) const {
  const auto bin = std::filesystem::path(stem.string() + ".bin");
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + bin.string());
  for (const Complex& c : entries) {
    const double v[2] = {c.real(), c.imag()};
    out.write(reinterpret_cast<const char*>(v), sizeof(v));
  }
  nlohmann::json side = {{"levels", levels},
                         {"width", width},
                         {"columns", columns},
                         {"portion", portion},
                         {"potential_hash", potential_hash},
                         {"layout", "column-major complex128, interleaved re/im"}};
  std::ofstream js(stem.string() + ".json");
  if (!js) throw Error(ErrorKind::io, "cannot write sidecar for " + stem.string());
  js << side.dump(2) << '\n';
}

DtnMatrix DtnMatrix::load(const std::filesystem::path& stem) {
  std::ifstream js(stem.string() + ".json");
  if (!js) throw Error(ErrorKind::io, "missing sidecar for " + stem.string());
  const auto side = nlohmann::json::parse(js);
  DtnMatrix m;
  m.levels = side.at("levels");
  m.width = side.at("width");
  m.columns = side.at("columns");
  m.portion = side.at("portion");
  m.potential_hash = side.at("potential_hash");
  std::ifstream in(stem.string() + ".bin", std::ios::binary);
  const std::size_t count = static_cast<std::size_t>(m.levels) * static_cast<std::size_t>(m.width) *
                            static_cast<std::size_t>(m.columns);
  m.entries.resize(count);
  for (auto& c : m.entries) {
    double v[2];
    in.read(reinterpret_cast<char*>(v), sizeof(v));
    c = Complex(v[0], v[1]);
  }
  if (!in) throw Error(ErrorKind::io, "truncated DtN matrix " + stem.string());
  return m;
}

DtnMatrix materialize_dtn(const Potential& q, const std::vector<LinearData>& basis,
                          const SpaceTimeGrid& grid, const BoundaryPortion& portion, int threads) {
  DtnMatrix m;
  m.columns = static_cast<int>(basis.size());
  m.portion = portion.name;
  m.potential_hash = q.hash();
  std::vector<BoundaryTrace> cols(basis.size());
  parallel_for(basis.size(), threads, [&](std::size_t b) {
    cols[b] = dtn_apply(q, basis[b], grid, portion, DtnMode::lateral_only).trace;
  });
  if (!cols.empty()) {
    m.levels = cols[0].levels;
    m.width = static_cast<int>(cols[0].width());
  }
  for (const auto& c : cols) m.entries.insert(m.entries.end(), c.values.begin(), c.values.end());
  return m;
}

}  // namespace wavenl
