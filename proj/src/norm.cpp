#include "finsler/norm.hpp"

#include "finsler/error.hpp"
#include "finsler/sphere_search.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace finsler {

std::string_view to_string(NormFamily family) {
  switch (family) {
    case NormFamily::euclidean: return "euclidean";
    case NormFamily::p_norm: return "p_norm";
    case NormFamily::ellipse: return "ellipse";
    case NormFamily::smoothed_polytope: return "smoothed_polytope";
    case NormFamily::custom: return "custom";
  }
  return "unknown";
}

NormFamily norm_family_from_string(std::string_view name) {
  if (name == "euclidean") return NormFamily::euclidean;
  if (name == "p_norm") return NormFamily::p_norm;
  if (name == "ellipse") return NormFamily::ellipse;
  if (name == "smoothed_polytope") return NormFamily::smoothed_polytope;
  if (name == "custom") return NormFamily::custom;
  throw InvalidSpec("unknown norm family '" + std::string(name) + "'");
}

namespace detail {

double p_norm_flux(const NormData& d, const double* xi, double* a) {
  double scale = 0.0;
  for (int i = 0; i < d.dim; ++i) scale = std::max(scale, std::abs(xi[i]));
  if (scale == 0.0) {
    for (int i = 0; i < d.dim; ++i) a[i] = 0.0;
    return 0.0;
  }
  // A_i = sign(ξ_i)|ξ_i|^{p-1} H^{2-p}, evaluated on ξ/scale to avoid overflow.
  const double p = d.p;
  double sum = 0.0;
  std::array<double, kMaxDimension> pw{};
  for (int i = 0; i < d.dim; ++i) {
    const double t = std::abs(xi[i]) / scale;
    pw[static_cast<std::size_t>(i)] = t == 0.0 ? 0.0 : std::pow(t, p - 1.0);
    sum += pw[static_cast<std::size_t>(i)] * t;
  }
  const double h_scaled = std::pow(sum, 1.0 / p);
  const double factor = scale * std::pow(h_scaled, 2.0 - p);
  for (int i = 0; i < d.dim; ++i) {
    a[i] = std::copysign(pw[static_cast<std::size_t>(i)] * factor, xi[i]);
  }
  const double h = scale * h_scaled;
  return 0.5 * h * h;
}

double polytope_flux(const NormData& d, const double* xi, double* a) {
  double sq = 0.0;
  for (int i = 0; i < d.dim; ++i) sq += xi[i] * xi[i];
  if (sq == 0.0) {
    for (int i = 0; i < d.dim; ++i) a[i] = 0.0;
    return 0.0;
  }
  // f_k = sqrt((d_k·ξ)² + ε²|ξ|²), H = (Σ f_k^s)^{1/s}, A = Σ (f_k/H)^{s-2} ((d_k·ξ)d_k + ε²ξ).
  const double eps2 = d.epsilon * d.epsilon;
  const double s = d.exponent;
  const std::size_t k_count = d.directions.size();
  std::array<double, kMaxPolytopeDirections> proj{}, f{};
  double fmax = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    double dot = 0.0;
    for (int i = 0; i < d.dim; ++i) dot += d.directions[k][i] * xi[i];
    proj[k] = dot;
    f[k] = std::sqrt(dot * dot + eps2 * sq);
    fmax = std::max(fmax, f[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) sum += std::pow(f[k] / fmax, s);
  const double h = fmax * std::pow(sum, 1.0 / s);
  for (int i = 0; i < d.dim; ++i) a[i] = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double w = std::pow(f[k] / h, s - 2.0);
    for (int i = 0; i < d.dim; ++i) a[i] += w * (proj[k] * d.directions[k][i] + eps2 * xi[i]);
  }
  return 0.5 * h * h;
}

double custom_flux(const NormData& d, const double* xi, double* a) {
  Vec v(d.dim);
  for (int i = 0; i < d.dim; ++i) v[i] = xi[i];
  const double h = d.custom(v);
  if (v.norm() == 0.0) {
    for (int i = 0; i < d.dim; ++i) a[i] = 0.0;
    return 0.0;
  }
  const Vec g = central_difference_gradient(d.custom, v);
  for (int i = 0; i < d.dim; ++i) a[i] = h * g[i];
  return 0.5 * h * h;
}

}  // namespace detail

namespace {

void check_dim_range(int dimension) {
  if (dimension < 1 || dimension > kMaxDimension) {
    throw InvalidSpec("norm dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
  }
}

EquivalenceBounds sampled_bounds(const NormSpec& norm) {
  const int dim = norm.dimension();
  SphereSearchOptions opts;
  opts.samples = dim == 2 ? 720 : 2000;
  auto ratio = [&](const Vec& v) { return norm(v) / v.norm(); };
  const auto hi = maximize_on_sphere(ratio, dim, opts);
  const auto lo = maximize_on_sphere([&](const Vec& v) { return -ratio(v); }, dim, opts);
  EquivalenceBounds b;
  b.max_on_sphere = hi.value;
  b.min_on_sphere = -lo.value;
  return b;
}

void fill_constants(EquivalenceBounds& b) {
  b.c1 = b.min_on_sphere * b.min_on_sphere;
  b.c2 = b.max_on_sphere * b.max_on_sphere;
}

}  // namespace

NormSpec NormSpec::finish(detail::NormData data) {
  auto ptr = std::make_shared<detail::NormData>(std::move(data));
  NormSpec spec(ptr);
  auto& b = ptr->bounds;
  switch (ptr->family) {
    case NormFamily::euclidean:
      b.min_on_sphere = b.max_on_sphere = 1.0;
      break;
    case NormFamily::p_norm: {
      const double f = std::pow(static_cast<double>(ptr->dim), 1.0 / ptr->p - 0.5);
      b.min_on_sphere = std::min(1.0, f);
      b.max_on_sphere = std::max(1.0, f);
      break;
    }
    case NormFamily::ellipse: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ptr->matrix);
      b.min_on_sphere = std::sqrt(es.eigenvalues().minCoeff());
      b.max_on_sphere = std::sqrt(es.eigenvalues().maxCoeff());
      break;
    }
    case NormFamily::smoothed_polytope:
    case NormFamily::custom:
      b = sampled_bounds(spec);
      break;
  }
  fill_constants(b);
  return spec;
}

NormSpec NormSpec::euclidean(int dimension) {
  check_dim_range(dimension);
  detail::NormData d;
  d.family = NormFamily::euclidean;
  d.dim = dimension;
  return finish(std::move(d));
}

NormSpec NormSpec::p_norm(int dimension, double p) {
  check_dim_range(dimension);
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw InvalidSpec("p_norm requires 1 < p < inf (got p=" + std::to_string(p) + ")");
  }
  detail::NormData d;
  d.family = NormFamily::p_norm;
  d.dim = dimension;
  d.p = p;
  return finish(std::move(d));
}

NormSpec NormSpec::ellipse(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidSpec("ellipse matrix must be square");
  check_dim_range(static_cast<int>(m.rows()));
  if (!m.allFinite()) throw InvalidSpec("ellipse matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidSpec("ellipse matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidSpec("ellipse matrix must be positive definite");
  }
  detail::NormData d;
  d.family = NormFamily::ellipse;
  d.dim = static_cast<int>(m.rows());
  d.matrix = 0.5 * (m + m.transpose());
  for (int i = 0; i < d.dim; ++i)
    for (int j = 0; j < d.dim; ++j) d.m[static_cast<std::size_t>(i * kMaxDimension + j)] = d.matrix(i, j);
  return finish(std::move(d));
}

NormSpec NormSpec::smoothed_polytope(const std::vector<Vec>& directions, double epsilon,
                                     double exponent) {
  if (directions.empty()) throw InvalidSpec("smoothed_polytope needs directions");
  if (directions.size() > static_cast<std::size_t>(kMaxPolytopeDirections)) {
    throw InvalidSpec("smoothed_polytope supports at most " +
                      std::to_string(kMaxPolytopeDirections) + " directions");
  }
  const int dim = static_cast<int>(directions.front().size());
  check_dim_range(dim);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidSpec("smoothed_polytope requires epsilon > 0");
  }
  if (!(exponent >= 2.0) || !std::isfinite(exponent)) {
    throw InvalidSpec("smoothed_polytope exponent must be finite and >= 2");
  }
  detail::NormData d;
  d.family = NormFamily::smoothed_polytope;
  d.dim = dim;
  d.epsilon = epsilon;
  d.exponent = exponent;
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(directions.size()), dim);
  for (std::size_t k = 0; k < directions.size(); ++k) {
    if (directions[k].size() != dim) throw InvalidSpec("smoothed_polytope: mixed dimensions");
    const double n = directions[k].norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidSpec("smoothed_polytope: zero direction");
    d.directions.push_back(directions[k] / n);
    stacked.row(static_cast<Eigen::Index>(k)) = d.directions.back().transpose();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(stacked);
  if (lu.rank() < dim) {
    throw InvalidSpec("smoothed_polytope needs N linearly independent directions");
  }
  return finish(std::move(d));
}

NormSpec NormSpec::custom(int dimension, std::function<double(const Vec&)> eval,
                          std::string name) {
  check_dim_range(dimension);
  if (!eval) throw InvalidSpec("custom norm needs an evaluation function");
  detail::NormData d;
  d.family = NormFamily::custom;
  d.dim = dimension;
  d.custom = std::move(eval);
  d.custom_name = std::move(name);
  // Axioms are checked before the bounds search runs on a possibly broken function.
  auto probe = std::make_shared<detail::NormData>(d);
  const NormSpec probe_spec(probe);
  const auto report = sample_axioms(probe_spec, 256, 0xC0FFEEULL);
  if (report.homogeneity > 1e-10 || report.convexity > 1e-10 || !(report.positivity > 0.0)) {
    throw InvalidSpec("custom norm violates homogeneity, convexity or positivity on samples");
  }
  return finish(std::move(d));
}

std::string NormSpec::describe() const {
  std::ostringstream os;
  os.precision(6);
  switch (family()) {
    case NormFamily::euclidean:
      os << "euclidean";
      break;
    case NormFamily::p_norm:
      os << "p_norm(p=" << p() << ")";
      break;
    case NormFamily::ellipse: {
      const auto& m = matrix();
      const bool diagonal = (m - Eigen::MatrixXd(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
      if (diagonal) {
        os << "ellipse(diag(";
        for (int i = 0; i < dimension(); ++i) os << (i ? "," : "") << m(i, i);
        os << "))";
      } else {
        os << "ellipse(full)";
      }
      break;
    }
    case NormFamily::smoothed_polytope:
      os << "smoothed_polytope(k=" << directions().size() << ",eps=" << epsilon()
         << ",s=" << exponent() << ")";
      break;
    case NormFamily::custom:
      os << d_->custom_name;
      break;
  }
  return os.str();
}

bool NormSpec::has_closed_form_dual() const {
  return family() == NormFamily::euclidean || family() == NormFamily::p_norm ||
         family() == NormFamily::ellipse;
}

bool NormSpec::has_quadratic_energy() const {
  return family() == NormFamily::euclidean || family() == NormFamily::ellipse ||
         (family() == NormFamily::p_norm && p() == 2.0);
}

std::optional<NormSpec> NormSpec::closed_form_dual() const {
  switch (family()) {
    case NormFamily::euclidean:
      return *this;
    case NormFamily::p_norm:
      return NormSpec::p_norm(dimension(), p() / (p() - 1.0));
    case NormFamily::ellipse: {
      Eigen::MatrixXd inv = matrix().inverse();
      inv = 0.5 * (inv + inv.transpose());
      return NormSpec::ellipse(inv);
    }
    default:
      return std::nullopt;
  }
}

void check_dimension(const NormSpec& norm, const Vec& v) {
  if (v.size() != norm.dimension()) {
    throw InvalidSpec("dimension mismatch: vector has " + std::to_string(v.size()) +
                      " components, norm has dimension " + std::to_string(norm.dimension()));
  }
}

double NormSpec::operator()(const Vec& xi) const {
  check_dimension(*this, xi);
  const auto& d = *d_;
  switch (d.family) {
    case NormFamily::euclidean:
      return xi.norm();
    case NormFamily::p_norm: {
      const double scale = xi.cwiseAbs().maxCoeff();
      if (scale == 0.0) return 0.0;
      double sum = 0.0;
      for (int i = 0; i < d.dim; ++i) sum += std::pow(std::abs(xi[i]) / scale, d.p);
      return scale * std::pow(sum, 1.0 / d.p);
    }
    case NormFamily::ellipse: {
      const Eigen::VectorXd x = xi;
      return std::sqrt(std::max(0.0, x.dot(d.matrix * x)));
    }
    case NormFamily::smoothed_polytope:
    case NormFamily::custom: {
      if (d.family == NormFamily::custom) return d.custom(xi);
      std::array<double, kMaxDimension> a{};
      return std::sqrt(2.0 * flux(xi.data(), a.data()));
    }
  }
  return 0.0;
}

Vec NormSpec::duality_map(const Vec& xi) const {
  check_dimension(*this, xi);
  Vec a(dimension());
  flux(xi.data(), a.data());
  return a;
}

Vec NormSpec::gradient(const Vec& xi) const {
  check_dimension(*this, xi);
  if (xi.norm() == 0.0) {
    throw DomainError("gradient of H is undefined at 0; use duality_map");
  }
  if (family() == NormFamily::custom) return central_difference_gradient(d_->custom, xi);
  // ∇H = A/H; H>0 away from 0.
  Vec a(dimension());
  const double h = std::sqrt(2.0 * flux(xi.data(), a.data()));
  return a / h;
}

bool NormSpec::operator==(const NormSpec& other) const {
  if (d_ == other.d_) return true;
  if (family() != other.family() || dimension() != other.dimension()) return false;
  switch (family()) {
    case NormFamily::euclidean: return true;
    case NormFamily::p_norm: return p() == other.p();
    case NormFamily::ellipse: return matrix() == other.matrix();
    case NormFamily::smoothed_polytope:
      return epsilon() == other.epsilon() && exponent() == other.exponent() &&
             directions() == other.directions();
    case NormFamily::custom: return false;
  }
  return false;
}

Vec central_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  const double h = std::max(1e-6, 1e-6 * x.norm());
  Vec g(x.size());
  Vec probe = x;
  for (int i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vec random_vector(int dimension, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(std::log(0.1), std::log(10.0));
  Vec v(dimension);
  double n = 0.0;
  do {
    for (int i = 0; i < dimension; ++i) v[i] = normal(rng);
    n = v.norm();
  } while (n < 1e-8);
  return v * (std::exp(uniform(rng)) / n);
}

AxiomReport sample_axioms(const NormSpec& norm, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha_dist(-5.0, 5.0);
  AxiomReport r;
  r.positivity = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const Vec xi = random_vector(norm.dimension(), rng);
    const Vec eta = random_vector(norm.dimension(), rng);
    const double alpha = alpha_dist(rng);
    const double h = norm(xi);
    r.homogeneity = std::max(r.homogeneity, std::abs(norm(Vec(alpha * xi)) - std::abs(alpha) * h) / (1.0 + h));
    const Vec mid = 0.5 * (xi + eta);
    r.convexity = std::max(r.convexity, norm(mid) - 0.5 * (h + norm(eta)));
    r.positivity = std::min(r.positivity, h / xi.norm());
  }
  return r;
}

}  // namespace finsler
