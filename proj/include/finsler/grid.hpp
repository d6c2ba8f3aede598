#pragma once

#include "finsler/norm.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace finsler {

inline constexpr int kMaxGridDimension = 3;

/// Uniform node lattice over a box. Axis a has cells[a] + 1 nodes; values are stored
/// row-major with axis 0 slowest.
struct GridShape {
  int dim = 0;
  std::array<double, kMaxGridDimension> lo{};
  std::array<double, kMaxGridDimension> hi{};
  std::array<int, kMaxGridDimension> cells{};

  static GridShape cube(int dim, double lo, double hi, int cells);

  void validate() const;
  int nodes(int axis) const { return cells[axis] + 1; }
  std::size_t size() const;
  double spacing(int axis) const { return (hi[axis] - lo[axis]) / cells[axis]; }
  double max_spacing() const;
  double cell_volume() const;
  std::size_t stride(int axis) const;
  std::array<int, kMaxGridDimension> unravel(std::size_t idx) const;
  std::size_t ravel(const std::array<int, kMaxGridDimension>& ijk) const;
  double coord(int axis, int i) const { return lo[axis] + i * spacing(axis); }
  Vec point(std::size_t idx) const;
  /// True for nodes on the outer face of the box.
  bool on_boundary(std::size_t idx) const;
  /// Same box with every cell count multiplied by `factor`.
  GridShape refined(int factor = 2) const;

  bool operator==(const GridShape&) const = default;
};

/// Scalar node values on a GridShape.
struct GridFunction {
  GridShape shape;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(const GridShape& s, double fill = 0.0);
  GridFunction(const GridShape& s, std::vector<double> v);

  static GridFunction sample(const GridShape& s, const std::function<double(const Vec&)>& f);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }

  /// Throws DomainError on the first non-finite value.
  void require_finite() const;
  /// Midpoint-rule integral Σ u · cell volume (non-finite nodes are skipped).
  double integral() const;
};

/// Binary dump: u64 N, N×(f64 lo, f64 hi), N×u64 cells, then the row-major f64 payload.
void write_binary(const GridFunction& g, std::ostream& os);
void write_binary(const GridFunction& g, const std::string& path);
GridFunction read_binary(std::istream& is);
GridFunction read_binary(const std::string& path);

/// CSV with header "x0,...,x{N-1},value" and one row per node; 17 significant digits.
void write_csv(const GridFunction& g, std::ostream& os);

/// Shortest round-trip-exact text with 17 significant digits.
std::string format_double(double v);

/// Per-node ∇u: central differences inside, second-order one-sided on the box faces.
std::vector<GridFunction> gradient(const GridFunction& u);

}  // namespace finsler
