#include "finsler/grid.hpp"

#include "finsler/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

namespace finsler {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

GridShape GridShape::cube(int dim, double lo, double hi, int cells) {
  GridShape s;
  s.dim = dim;
  for (int a = 0; a < dim && a < kMaxGridDimension; ++a) {
    s.lo[a] = lo;
    s.hi[a] = hi;
    s.cells[a] = cells;
  }
  s.validate();
  return s;
}

void GridShape::validate() const {
  if (dim < 1 || dim > kMaxGridDimension) throw InvalidSpec("grid dimension must be 1, 2 or 3");
  for (int a = 0; a < dim; ++a) {
    if (cells[a] < 4) throw InvalidSpec("grid needs at least 4 cells per axis");
    if (!std::isfinite(lo[a]) || !std::isfinite(hi[a]) || !(hi[a] > lo[a])) {
      throw InvalidSpec("grid box must satisfy lo < hi on every axis");
    }
  }
}

std::size_t GridShape::size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(nodes(a));
  return n;
}

double GridShape::max_spacing() const {
  double h = 0.0;
  for (int a = 0; a < dim; ++a) h = std::max(h, spacing(a));
  return h;
}

double GridShape::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= spacing(a);
  return v;
}

std::size_t GridShape::stride(int axis) const {
  std::size_t s = 1;
  for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(nodes(a));
  return s;
}

std::array<int, kMaxGridDimension> GridShape::unravel(std::size_t idx) const {
  std::array<int, kMaxGridDimension> ijk{};
  for (int a = dim - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(nodes(a));
    ijk[a] = static_cast<int>(idx % n);
    idx /= n;
  }
  return ijk;
}

std::size_t GridShape::ravel(const std::array<int, kMaxGridDimension>& ijk) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim; ++a) idx = idx * static_cast<std::size_t>(nodes(a)) + ijk[a];
  return idx;
}

Vec GridShape::point(std::size_t idx) const {
  const auto ijk = unravel(idx);
  Vec x(dim);
  for (int a = 0; a < dim; ++a) x[a] = coord(a, ijk[a]);
  return x;
}

bool GridShape::on_boundary(std::size_t idx) const {
  const auto ijk = unravel(idx);
  for (int a = 0; a < dim; ++a) {
    if (ijk[a] == 0 || ijk[a] == cells[a]) return true;
  }
  return false;
}

GridShape GridShape::refined(int factor) const {
  GridShape s = *this;
  for (int a = 0; a < dim; ++a) s.cells[a] *= factor;
  return s;
}

GridFunction::GridFunction(const GridShape& s, double fill) : shape(s) {
  shape.validate();
  values.assign(shape.size(), fill);
}

GridFunction::GridFunction(const GridShape& s, std::vector<double> v) : shape(s), values(std::move(v)) {
  shape.validate();
  if (values.size() != shape.size()) throw InvalidSpec("grid payload size does not match shape");
}

GridFunction GridFunction::sample(const GridShape& s, const std::function<double(const Vec&)>& f) {
  GridFunction g(s);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = f(s.point(i));
  return g;
}

void GridFunction::require_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("grid function has non-finite values");
  }
}

double GridFunction::integral() const {
  double s = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) s += v;
  }
  return s * shape.cell_volume();
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidSpec("truncated grid dump");
  return v;
}

}  // namespace

void write_binary(const GridFunction& g, std::ostream& os) {
  const auto& s = g.shape;
  put<std::uint64_t>(os, static_cast<std::uint64_t>(s.dim));
  for (int a = 0; a < s.dim; ++a) {
    put<double>(os, s.lo[a]);
    put<double>(os, s.hi[a]);
  }
  for (int a = 0; a < s.dim; ++a) put<std::uint64_t>(os, static_cast<std::uint64_t>(s.cells[a]));
  os.write(reinterpret_cast<const char*>(g.values.data()),
           static_cast<std::streamsize>(g.values.size() * sizeof(double)));
}

void write_binary(const GridFunction& g, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_binary(g, os);
}

GridFunction read_binary(std::istream& is) {
  GridShape s;
  const auto dim = get<std::uint64_t>(is);
  if (dim < 1 || dim > kMaxGridDimension) throw InvalidSpec("grid dump has invalid dimension");
  s.dim = static_cast<int>(dim);
  for (int a = 0; a < s.dim; ++a) {
    s.lo[a] = get<double>(is);
    s.hi[a] = get<double>(is);
  }
  for (int a = 0; a < s.dim; ++a) {
    const auto c = get<std::uint64_t>(is);
    if (c > (1u << 24)) throw InvalidSpec("grid dump has implausible cell count");
    s.cells[a] = static_cast<int>(c);
  }
  s.validate();
  std::vector<double> v(s.size());
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw InvalidSpec("truncated grid dump payload");
  return GridFunction(s, std::move(v));
}

GridFunction read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_binary(is);
}

std::string format_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

void write_csv(const GridFunction& g, std::ostream& os) {
  const auto& s = g.shape;
  for (int a = 0; a < s.dim; ++a) os << 'x' << a << ',';
  os << "value\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ijk = s.unravel(i);
    for (int a = 0; a < s.dim; ++a) os << format_double(s.coord(a, ijk[a])) << ',';
    os << format_double(g[i]) << '\n';
  }
}

std::vector<GridFunction> gradient(const GridFunction& u) {
  const auto& s = u.shape;
  std::vector<GridFunction> out;
  for (int a = 0; a < s.dim; ++a) {
    GridFunction d(s);
    const auto st = s.stride(a);
    const double h = s.spacing(a);
    const int last = s.cells[a];
    for (std::size_t i = 0; i < u.size(); ++i) {
      const int k = s.unravel(i)[a];
      if (k == 0) {
        d[i] = (-3.0 * u[i] + 4.0 * u[i + st] - u[i + 2 * st]) / (2.0 * h);
      } else if (k == last) {
        d[i] = (3.0 * u[i] - 4.0 * u[i - st] + u[i - 2 * st]) / (2.0 * h);
      } else {
        d[i] = (u[i + st] - u[i - st]) / (2.0 * h);
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace finsler
