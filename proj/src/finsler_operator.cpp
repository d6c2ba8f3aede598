#include "finsler/finsler_operator.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace finsler {
namespace {

template <int N>
double corner_kernel(const GridShape& s, const NormSpec& norm, const std::vector<std::size_t>& cells,
                     const double* u, double* flux, bool with_flux) {
  constexpr int kCorners = 1 << N;
  std::array<std::size_t, N> stride{};
  std::array<double, N> inv_h{};
  for (int a = 0; a < N; ++a) {
    stride[a] = s.stride(a);
    inv_h[a] = 1.0 / s.spacing(a);
  }
  std::array<std::size_t, kCorners> offset{};
  for (int k = 0; k < kCorners; ++k) {
    for (int a = 0; a < N; ++a) {
      if (k & (1 << a)) offset[k] += stride[a];
    }
  }
  const std::size_t total = s.size();
  const double weight = 1.0 / kCorners;

  double energy = 0.0;
  std::array<double, N> g{}, A{};
  for (const std::size_t c : cells) {
    for (int k = 0; k < kCorners; ++k) {
      for (int a = 0; a < N; ++a) {
        const std::size_t lo = c + offset[k & ~(1 << a)];
        g[a] = (u[lo + stride[a]] - u[lo]) * inv_h[a];
      }
      energy += norm.flux(g.data(), A.data());
      if (with_flux) {
        for (int a = 0; a < N; ++a) flux[a * total + c + offset[k & ~(1 << a)]] += weight * A[a];
      }
    }
  }
  return energy * s.cell_volume() * weight;
}

double run_kernel(const GridShape& s, const NormSpec& norm, const std::vector<std::size_t>& cells,
                  const double* u, double* flux, bool with_flux) {
  switch (s.dim) {
    case 1:
      return corner_kernel<1>(s, norm, cells, u, flux, with_flux);
    case 2:
      return corner_kernel<2>(s, norm, cells, u, flux, with_flux);
    default:
      return corner_kernel<3>(s, norm, cells, u, flux, with_flux);
  }
}

}  // namespace

FinslerOperator::FinslerOperator(const GridShape& shape, NormSpec norm)
    : shape_(shape), norm_(std::move(norm)) {
  init(std::vector<std::uint8_t>(shape.size(), 1));
}

FinslerOperator::FinslerOperator(const GridShape& shape, NormSpec norm,
                                 const std::vector<std::uint8_t>& free_mask)
    : shape_(shape), norm_(std::move(norm)) {
  init(free_mask);
}

void FinslerOperator::init(const std::vector<std::uint8_t>& free_mask) {
  shape_.validate();
  if (norm_.dimension() != shape_.dim) throw InvalidSpec("norm and grid dimensions differ");
  if (free_mask.size() != shape_.size()) throw InvalidSpec("free mask size does not match grid");
  const std::size_t n = shape_.size();
  mask_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (free_mask[i] && !shape_.on_boundary(i)) {
      mask_[i] = 1;
      free_.push_back(i);
    }
  }
  // A cell is visited when any of its corners is free.
  std::vector<std::uint8_t> visit(n, 0);
  for (const std::size_t p : free_) {
    const auto ijk = shape_.unravel(p);
    for (int k = 0; k < (1 << shape_.dim); ++k) {
      auto c = ijk;
      for (int a = 0; a < shape_.dim; ++a) {
        if (k & (1 << a)) --c[a];
      }
      visit[shape_.ravel(c)] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (visit[i]) cells_.push_back(i);
  }
  flux_.assign(static_cast<std::size_t>(shape_.dim) * n, 0.0);

  if (!norm_.has_quadratic_energy()) return;
  // Δ_h is linear and translation invariant: apply it to a unit impulse at the centre of a
  // 5^N patch with the same spacing; the coefficient of offset o is Δ_h δ at centre − o.
  GridShape patch;
  patch.dim = shape_.dim;
  for (int a = 0; a < shape_.dim; ++a) {
    patch.lo[a] = 0.0;
    patch.hi[a] = 4.0 * shape_.spacing(a);
    patch.cells[a] = 4;
  }
  std::vector<std::size_t> patch_cells;
  for (std::size_t i = 0; i < patch.size(); ++i) {
    const auto ijk = patch.unravel(i);
    bool lower = true;
    for (int a = 0; a < patch.dim; ++a) lower = lower && ijk[a] < 4;
    if (lower) patch_cells.push_back(i);
  }
  std::vector<double> delta(patch.size(), 0.0), flux(patch.dim * patch.size(), 0.0);
  const std::array<int, kMaxGridDimension> centre{2, 2, 2};
  delta[patch.ravel(centre)] = 1.0;
  run_kernel(patch, norm_, patch_cells, delta.data(), flux.data(), true);
  auto lap_at = [&](std::size_t p) {
    double v = 0.0;
    for (int a = 0; a < patch.dim; ++a) {
      const double* f = flux.data() + a * patch.size();
      v += (f[p] - f[p - patch.stride(a)]) / patch.spacing(a);
    }
    return v;
  };
  int count = 1;
  for (int a = 0; a < shape_.dim; ++a) count *= 3;
  for (int k = 0; k < count; ++k) {
    std::array<int, kMaxGridDimension> p = centre;
    std::ptrdiff_t offset = 0;
    for (int a = 0, rest = k; a < shape_.dim; ++a, rest /= 3) {
      const int o = rest % 3 - 1;
      p[a] -= o;
      offset += o * static_cast<std::ptrdiff_t>(shape_.stride(a));
    }
    const double c = lap_at(patch.ravel(p));
    if (c != 0.0) {
      stencil_offset_.push_back(offset);
      stencil_coeff_.push_back(c);
    }
  }
}

void FinslerOperator::laplacian(const std::vector<double>& u, std::vector<double>& lap) const {
  if (stencil_coeff_.empty()) {
    apply(u, lap);
    return;
  }
  const std::size_t n = shape_.size();
  if (u.size() != n) throw InvalidSpec("operator input has the wrong size");
  lap.assign(n, 0.0);
  const std::size_t m = stencil_coeff_.size();
  for (const std::size_t p : free_) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += stencil_coeff_[k] * u[p + stencil_offset_[k]];
    lap[p] = s;
  }
}

double FinslerOperator::apply(const std::vector<double>& u, std::vector<double>& lap) const {
  const std::size_t n = shape_.size();
  if (u.size() != n) throw InvalidSpec("operator input has the wrong size");
  std::fill(flux_.begin(), flux_.end(), 0.0);
  const double e = run_kernel(shape_, norm_, cells_, u.data(), flux_.data(), true);
  lap.assign(n, 0.0);
  for (int a = 0; a < shape_.dim; ++a) {
    const double* f = flux_.data() + static_cast<std::size_t>(a) * n;
    const std::size_t st = shape_.stride(a);
    const double inv_h = 1.0 / shape_.spacing(a);
    for (const std::size_t p : free_) lap[p] += (f[p] - f[p - st]) * inv_h;
  }
  return e;
}

double FinslerOperator::energy(const std::vector<double>& u) const {
  if (u.size() != shape_.size()) throw InvalidSpec("operator input has the wrong size");
  return run_kernel(shape_, norm_, cells_, u.data(), nullptr, false);
}

GridFunction finsler_laplacian(const GridFunction& u, const NormSpec& norm) {
  const FinslerOperator op(u.shape, norm);
  GridFunction out(u.shape);
  op.apply(u.values, out.values);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!op.is_free(i)) out[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double discrete_energy(const GridFunction& u, const NormSpec& norm) {
  const auto& s = u.shape;
  if (norm.dimension() != s.dim) throw InvalidSpec("norm and grid dimensions differ");
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto ijk = s.unravel(i);
    bool lower = true;
    for (int a = 0; a < s.dim; ++a) lower = lower && ijk[a] < s.cells[a];
    if (lower) cells.push_back(i);
  }
  return run_kernel(s, norm, cells, u.values.data(), nullptr, false);
}

double radial_laplacian_at(const RadialProfile& rp, int dimension, double r) {
  if (dimension < 1) throw InvalidSpec("dimension must be positive");
  if (r == 0.0) return dimension * rp.second_derivative(0.0);
  return rp.second_derivative(r) + (dimension - 1) * rp.derivative(r) / r;
}

RadialProfile radial_laplacian(const RadialProfile& rp, int dimension) {
  std::vector<double> v;
  v.reserve(rp.radii().size());
  for (double r : rp.radii()) v.push_back(radial_laplacian_at(rp, dimension, r));
  return RadialProfile(rp.radii(), std::move(v), rp.even());
}

GridFunction dual_norm_field(const NormSpec& norm, const GridShape& shape, const DualEvalConfig& cfg) {
  if (norm.dimension() != shape.dim) throw InvalidSpec("norm and grid dimensions differ");
  const DualNorm h0(norm, cfg);
  return GridFunction::sample(shape, [&](const Vec& x) { return h0(x); });
}

GridFunction lift_radial(const RadialProfile& rp, const NormSpec& norm, const GridShape& shape,
                         const DualEvalConfig& cfg) {
  GridFunction r = dual_norm_field(norm, shape, cfg);
  for (double& v : r.values) {
    if (v > rp.r_max() * (1.0 + 1e-14)) {
      throw RangeError("grid reaches beyond the radial profile", rp.r_max());
    }
    v = rp(std::min(v, rp.r_max()));
  }
  return r;
}

double observed_order(const std::vector<RefinementLevel>& levels) {
  if (levels.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto& c = levels[levels.size() - 2];
  const auto& f = levels.back();
  return std::log(c.max_error / f.max_error) / std::log(c.h / f.h);
}

namespace {

template <class F>
RefinementLevel measure(const GridShape& s, const GridFunction& r, double r_cut, F&& error_at) {
  RefinementLevel lvl;
  lvl.h = s.max_spacing();
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.on_boundary(i) || r[i] < r_cut) continue;
    const double e = error_at(i);
    lvl.max_error = std::max(lvl.max_error, e);
    sum += e;
    ++lvl.nodes;
  }
  lvl.mean_error = lvl.nodes ? sum / static_cast<double>(lvl.nodes) : 0.0;
  return lvl;
}

}  // namespace

ReductionReport check_radial_reduction(const RadialProfile& rp, const NormSpec& norm,
                                       const GridShape& shape, int refinements, double r_cut_factor) {
  ReductionReport rep;
  GridShape s = shape;
  for (int level = 0; level <= refinements; ++level, s = s.refined()) {
    const GridFunction r = dual_norm_field(norm, s);
    const GridFunction lap = finsler_laplacian(lift_radial(rp, norm, s), norm);
    rep.levels.push_back(measure(s, r, r_cut_factor * s.max_spacing(), [&](std::size_t i) {
      return std::abs(lap[i] - radial_laplacian_at(rp, s.dim, r[i]));
    }));
  }
  rep.order = observed_order(rep.levels);
  return rep;
}

LinearityReport check_linearity(const RadialProfile& rp1, const RadialProfile& rp2, double alpha,
                                double beta, const NormSpec& norm, const GridShape& shape,
                                int refinements, double r_cut_factor) {
  LinearityReport rep;
  auto combine = [&](const GridFunction& v, const GridFunction& w) {
    GridFunction c(v.shape);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = alpha * v[i] + beta * w[i];
    return c;
  };
  auto defect = [&](const GridShape& s, const GridFunction& r, const GridFunction& v,
                    const GridFunction& w) {
    const GridFunction lv = finsler_laplacian(v, norm);
    const GridFunction lw = finsler_laplacian(w, norm);
    const GridFunction lc = finsler_laplacian(combine(v, w), norm);
    return measure(s, r, r_cut_factor * s.max_spacing(), [&](std::size_t i) {
      return std::abs(lc[i] - alpha * lv[i] - beta * lw[i]);
    });
  };
  GridShape s = shape;
  for (int level = 0; level <= refinements; ++level, s = s.refined()) {
    const GridFunction r = dual_norm_field(norm, s);
    rep.radial.push_back(defect(s, r, lift_radial(rp1, norm, s), lift_radial(rp2, norm, s)));
    const auto x1 = GridFunction::sample(s, [](const Vec& x) { return x[0] * x[0]; });
    const auto x2 = GridFunction::sample(s, [](const Vec& x) { return x[1 % x.size()] * x[1 % x.size()]; });
    rep.control.push_back(defect(s, r, x1, x2));
  }
  rep.radial_order = observed_order(rep.radial);
  return rep;
}

}  // namespace finsler
