#pragma once

#include "finsler/norm.hpp"

#include <cstdint>
#include <functional>

namespace finsler {

struct SphereSearchOptions {
  int samples = 720;
  int refinement_iters = 20;
  double tolerance = 1e-12;
  int max_sweeps = 40;
  std::uint64_t seed = 0x5eedULL;
};

struct SphereSearchResult {
  double value = 0.0;
  Vec argmax;          // unit vector
  double gap = 0.0;    // change of the best value over the last sweep
  bool converged = false;
  int evaluations = 0;
};

/// Maximizes a degree-0 homogeneous function over the unit sphere of R^dim.
///
/// Quasi-uniform sampling (equi-angular for dim 2, Fibonacci for dim 3, seeded
/// Gaussian otherwise) locates the best cell; golden-section sweeps in a tangent-plane
/// chart then refine it. Because f is 0-homogeneous the chart needs no normalization.
/// Every returned value is an actual evaluation of f, so value ≤ sup f up to rounding.
SphereSearchResult maximize_on_sphere(const std::function<double(const Vec&)>& f, int dim,
                                      const SphereSearchOptions& options);

}  // namespace finsler
