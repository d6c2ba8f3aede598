#include "finsler/sphere_search.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace finsler {
namespace {

constexpr double kInvPhi = 0.6180339887498949;

std::vector<Vec> sample_directions(int dim, int samples, std::uint64_t seed) {
  std::vector<Vec> dirs;
  dirs.reserve(static_cast<std::size_t>(samples));
  if (dim == 2) {
    for (int k = 0; k < samples; ++k) {
      const double th = 2.0 * std::numbers::pi * k / samples;
      Vec v(2);
      v << std::cos(th), std::sin(th);
      dirs.push_back(v);
    }
  } else if (dim == 3) {
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < samples; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / samples;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden_angle * k;
      Vec v(3);
      v << r * std::cos(phi), r * std::sin(phi), z;
      dirs.push_back(v);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    while (static_cast<int>(dirs.size()) < samples) {
      Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = normal(rng);
      const double n = v.norm();
      if (n > 1e-12) dirs.push_back(v / n);
    }
  }
  return dirs;
}

// Angular size of one sampling cell on S^{dim-1}.
double cell_width(int dim, int samples) {
  if (dim == 2) return 2.0 * std::numbers::pi / samples;
  const double area = 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
  return 2.0 * std::pow(area / samples, 1.0 / (dim - 1));
}

// Orthonormal basis of the complement of the unit vector c.
std::vector<Vec> tangent_basis(const Vec& c) {
  const int dim = static_cast<int>(c.size());
  Eigen::MatrixXd a(dim, 1);
  a.col(0) = c;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  std::vector<Vec> basis;
  for (int k = 1; k < dim; ++k) basis.emplace_back(q.col(k));
  return basis;
}

}  // namespace

SphereSearchResult maximize_on_sphere(const std::function<double(const Vec&)>& f, int dim,
                                      const SphereSearchOptions& options) {
  if (dim < 1 || dim > kMaxDimension) throw InvalidSpec("sphere search: unsupported dimension");
  if (options.samples < 2 * dim) throw InvalidSpec("sphere search: need at least 2N samples");
  if (options.refinement_iters < 1) throw InvalidSpec("sphere search: refinement_iters < 1");
  if (!(options.tolerance > 0.0)) throw InvalidSpec("sphere search: tolerance must be > 0");

  SphereSearchResult out;
  if (dim == 1) {
    Vec plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    const double a = f(plus);
    const double b = f(minus);
    out.value = std::max(a, b);
    out.argmax = a >= b ? plus : minus;
    out.converged = true;
    out.evaluations = 2;
    return out;
  }

  int evals = 0;
  auto eval = [&](const Vec& v) {
    ++evals;
    return f(v);
  };

  const auto dirs = sample_directions(dim, options.samples, options.seed);
  Vec best = dirs.front();
  double best_value = eval(best);
  for (std::size_t k = 1; k < dirs.size(); ++k) {
    const double v = eval(dirs[k]);
    if (v > best_value) {
      best_value = v;
      best = dirs[k];
    }
  }

  const double initial_width = cell_width(dim, options.samples);
  double width = initial_width;
  double gap = std::numeric_limits<double>::infinity();
  int quiet_sweeps = 0;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    const auto basis = tangent_basis(best);
    Vec offset = Vec::Zero(dim);
    double current = best_value;
    bool hit_edge = false;
    double bracket = width;
    for (const Vec& t : basis) {
      auto line = [&](double s) { return eval(best + offset + s * t); };
      double lo = -width, hi = width;
      double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
      double f1 = line(x1), f2 = line(x2);
      for (int it = 0; it < options.refinement_iters; ++it) {
        if (f1 >= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - kInvPhi * (hi - lo);
          f1 = line(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + kInvPhi * (hi - lo);
          f2 = line(x2);
        }
      }
      const double s = f1 >= f2 ? x1 : x2;
      const double fs = std::max(f1, f2);
      if (fs > current) {
        current = fs;
        offset += s * t;
        if (std::abs(s) > 0.9 * width) hit_edge = true;
      }
      bracket = hi - lo;
    }
    const Vec candidate = (best + offset).normalized();
    const double candidate_value = eval(candidate);
    const double previous = best_value;
    if (candidate_value >= best_value) {
      best_value = candidate_value;
      best = candidate;
    }
    gap = std::abs(best_value - previous);
    if (hit_edge) {
      width = std::min(2.0 * width, initial_width * 4.0);
    } else {
      width = std::max(4.0 * bracket, 1e-9);
    }
    const bool small_gap = gap <= options.tolerance * std::max(1.0, std::abs(best_value));
    quiet_sweeps = small_gap ? quiet_sweeps + 1 : 0;
    if (quiet_sweeps >= 2 && width <= 1e-6) {
      out.converged = true;
      break;
    }
  }
  out.value = best_value;
  out.argmax = best;
  out.gap = gap;
  out.evaluations = evals;
  return out;
}

}  // namespace finsler
