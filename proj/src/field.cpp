#include "wavenl/field.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "wavenl/error.hpp"

namespace wavenl {

WaveField::WaveField(SpaceTimeGrid grid, bool complex_valued) : grid_(std::move(grid)) {
  const std::size_t n = static_cast<std::size_t>(grid_.levels()) * grid_.space().size();
  re_.assign(n, 0.0);
  if (complex_valued) im_.assign(n, 0.0);
}

WaveField WaveField::from_real(SpaceTimeGrid grid, std::vector<double> re) {
  WaveField f(std::move(grid), false);
  if (re.size() != f.re_.size()) throw Error(ErrorKind::shape, "field samples do not match grid");
  f.re_ = std::move(re);
  return f;
}

std::span<double> WaveField::real_level(int n) { return {re_.data() + offset(n), nodes()}; }
std::span<const double> WaveField::real_level(int n) const {
  return {re_.data() + offset(n), nodes()};
}
std::span<double> WaveField::imag_level(int n) {
  if (im_.empty()) throw Error(ErrorKind::shape, "real field has no imaginary part");
  return {im_.data() + offset(n), nodes()};
}
std::span<const double> WaveField::imag_level(int n) const {
  if (im_.empty()) throw Error(ErrorKind::shape, "real field has no imaginary part");
  return {im_.data() + offset(n), nodes()};
}

Complex WaveField::at(int n, std::size_t k) const {
  const std::size_t i = offset(n) + k;
  return {re_[i], im_.empty() ? 0.0 : im_[i]};
}

void WaveField::set(int n, std::size_t k, Complex v) {
  const std::size_t i = offset(n) + k;
  re_[i] = v.real();
  if (!im_.empty()) {
    im_[i] = v.imag();
  } else if (v.imag() != 0.0) {
    throw Error(ErrorKind::shape, "complex value written into a real field");
  }
}

double WaveField::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < re_.size(); ++i)
    m = std::max(m, im_.empty() ? std::abs(re_[i]) : std::hypot(re_[i], im_[i]));
  return m;
}

bool WaveField::finite() const {
  for (double v : re_)
    if (!std::isfinite(v)) return false;
  for (double v : im_)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {
constexpr char kMagic[4] = {'W', 'N', 'L', 'F'};

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

// Header: magic, version, domain kind, complex flag, levels, cells[2],
// spacing[2], dt; payload row-major (level, node), re/im interleaved.
void WaveField::write_binary(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid_.domain().kind()));
  put<std::uint32_t>(out, is_real() ? 0u : 1u);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(levels()));
  put<std::int32_t>(out, grid_.space().cells()[0]);
  put<std::int32_t>(out, grid_.space().cells()[1]);
  put<double>(out, grid_.space().spacing()[0]);
  put<double>(out, grid_.space().spacing()[1]);
  put<double>(out, grid_.dt());
  for (std::size_t i = 0; i < re_.size(); ++i) {
    put<double>(out, re_[i]);
    if (!im_.empty()) put<double>(out, im_[i]);
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

WaveField WaveField::read_binary(const std::filesystem::path& path, const SpaceTimeGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorKind::io, "not a field file");
  get<std::uint32_t>(in);
  const auto kind = get<std::uint32_t>(in);
  const bool cplx = get<std::uint32_t>(in) != 0;
  const auto levels = get<std::uint64_t>(in);
  const auto c0 = get<std::int32_t>(in);
  const auto c1 = get<std::int32_t>(in);
  get<double>(in);
  get<double>(in);
  get<double>(in);
  if (kind != static_cast<std::uint32_t>(grid.domain().kind()) ||
      levels != static_cast<std::uint64_t>(grid.levels()) || c0 != grid.space().cells()[0] ||
      c1 != grid.space().cells()[1])
    throw Error(ErrorKind::shape, "field file does not match the grid");
  WaveField f(grid, cplx);
  for (std::size_t i = 0; i < f.re_.size(); ++i) {
    f.re_[i] = get<double>(in);
    if (cplx) f.im_[i] = get<double>(in);
  }
  if (!in) throw Error(ErrorKind::io, "truncated field file " + path.string());
  return f;
}

void WaveField::write_csv_level(const std::filesystem::path& path, int n) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.precision(17);
  out << "x,y,re,im\n";
  for (std::size_t k = 0; k < nodes(); ++k) {
    const Point p = grid_.space().node(k);
    const Complex v = at(n, k);
    out << p.x << ',' << p.y << ',' << v.real() << ',' << v.imag() << '\n';
  }
}

WaveField apply_wave_operator(const WaveField& u) {
  const SpaceTimeGrid& g = u.grid();
  const int L = g.levels();
  const std::size_t N = u.nodes();
  const double idt2 = 1.0 / (g.dt() * g.dt());
  WaveField out(g, !u.is_real());
  std::vector<double> lap(N);
  auto one_part = [&](auto level_of, auto out_level) {
    for (int n = 0; n < L; ++n) {
      auto un = level_of(n);
      g.space().laplacian(un, lap);
      auto o = out_level(n);
      for (std::size_t k = 0; k < N; ++k) {
        if (g.space().is_boundary(k)) {
          o[k] = 0.0;
          continue;
        }
        double utt;
        if (n == 0) {
          utt = (2 * un[k] - 5 * level_of(1)[k] + 4 * level_of(2)[k] - level_of(3)[k]) * idt2;
        } else if (n == L - 1) {
          utt = (2 * un[k] - 5 * level_of(n - 1)[k] + 4 * level_of(n - 2)[k] -
                 level_of(n - 3)[k]) * idt2;
        } else {
          utt = (level_of(n - 1)[k] - 2 * un[k] + level_of(n + 1)[k]) * idt2;
        }
        o[k] = utt - lap[k];
      }
    }
  };
  one_part([&](int n) { return u.real_level(n); }, [&](int n) { return out.real_level(n); });
  if (!u.is_real())
    one_part([&](int n) { return u.imag_level(n); }, [&](int n) { return out.imag_level(n); });
  return out;
}

// ---------------------------------------------------------- BoundaryTrace

double BoundaryTrace::tangential_weight(std::size_t j) const {
  const std::size_t m = nodes.size();
  if (m <= 1) return 1.0;
  auto gap = [&](std::size_t a, std::size_t b) { return std::abs(nodes[b].s - nodes[a].s); };
  if (j == 0) return 0.5 * gap(0, 1);
  if (j == m - 1) return 0.5 * gap(m - 2, m - 1);
  return 0.5 * (gap(j - 1, j) + gap(j, j + 1));
}

double BoundaryTrace::l2_norm() const {
  double s = 0.0;
  for (int n = 0; n < levels; ++n) {
    const double wt = dt * ((n == 0 || n == levels - 1) ? 0.5 : 1.0);
    for (std::size_t j = 0; j < width(); ++j) s += wt * tangential_weight(j) * std::norm(at(n, j));
  }
  return std::sqrt(s);
}

bool BoundaryTrace::finite() const {
  for (const Complex& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

namespace {
void check_same(const BoundaryTrace& a, const BoundaryTrace& b) {
  if (a.levels != b.levels || a.width() != b.width())
    throw Error(ErrorKind::shape, "boundary traces have different shapes");
}
}  // namespace

BoundaryTrace operator-(const BoundaryTrace& a, const BoundaryTrace& b) {
  check_same(a, b);
  BoundaryTrace c = a;
  for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] -= b.values[i];
  return c;
}

BoundaryTrace operator+(const BoundaryTrace& a, const BoundaryTrace& b) {
  check_same(a, b);
  BoundaryTrace c = a;
  for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] += b.values[i];
  return c;
}

BoundaryTrace operator*(Complex s, const BoundaryTrace& a) {
  BoundaryTrace c = a;
  for (auto& v : c.values) v *= s;
  return c;
}

}  // namespace wavenl
