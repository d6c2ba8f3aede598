#include "finsler/initial_data.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace finsler {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

RadialFunction RadialFunction::constant(double a) {
  RadialFunction f;
  f.form = Form::constant;
  f.amplitude = a;
  return f;
}

RadialFunction RadialFunction::gaussian(double a, double c) {
  RadialFunction f;
  f.form = Form::gaussian;
  f.amplitude = a;
  f.coeff = c;
  return f;
}

RadialFunction RadialFunction::exp_power(double a, double c, double k) {
  if (!(k > 0.0)) throw InvalidSpec("exp_power needs exponent > 0");
  RadialFunction f;
  f.form = Form::exp_power;
  f.amplitude = a;
  f.coeff = c;
  f.exponent = k;
  return f;
}

RadialFunction RadialFunction::bump(double a, double R) {
  if (!(R > 0.0)) throw InvalidSpec("bump needs radius > 0");
  RadialFunction f;
  f.form = Form::bump;
  f.amplitude = a;
  f.radius = R;
  return f;
}

RadialFunction RadialFunction::samples(RadialProfile p) {
  RadialFunction f;
  f.form = Form::samples;
  f.profile = std::move(p);
  return f;
}

double RadialFunction::operator()(double r) const {
  switch (form) {
    case Form::constant: return amplitude;
    case Form::gaussian: return amplitude * std::exp(-coeff * r * r);
    case Form::exp_power: return amplitude * std::exp(coeff * std::pow(r, exponent));
    case Form::bump: {
      const double s = r / radius;
      return s < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
    }
    case Form::samples: return (*profile)(r);
  }
  return 0.0;
}

double RadialFunction::log_abs(double r) const {
  const double la = amplitude == 0.0 ? kNegInf : std::log(std::abs(amplitude));
  switch (form) {
    case Form::constant: return la;
    case Form::gaussian: return la - coeff * r * r;
    case Form::exp_power: return la + coeff * std::pow(r, exponent);
    case Form::bump: {
      const double s = r / radius;
      return s < 1.0 ? la + 1.0 - 1.0 / (1.0 - s * s) : kNegInf;
    }
    case Form::samples: {
      const double v = std::abs((*profile)(r));
      return v > 0.0 ? std::log(v) : kNegInf;
    }
  }
  return kNegInf;
}

double RadialFunction::support_radius() const {
  if (amplitude == 0.0 && form != Form::samples) return 0.0;
  if (form == Form::bump) return radius;
  return std::numeric_limits<double>::infinity();
}

std::string_view to_string(RadialFunction::Form form) {
  switch (form) {
    case RadialFunction::Form::constant: return "constant";
    case RadialFunction::Form::gaussian: return "gaussian";
    case RadialFunction::Form::exp_power: return "exp_power";
    case RadialFunction::Form::bump: return "bump";
    case RadialFunction::Form::samples: return "samples";
  }
  return "?";
}

RadialFunction::Form radial_form_from_string(std::string_view name) {
  for (auto f : {RadialFunction::Form::constant, RadialFunction::Form::gaussian,
                 RadialFunction::Form::exp_power, RadialFunction::Form::bump, RadialFunction::Form::samples}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidSpec("unknown radial form: " + std::string(name));
}

MeasureSpec MeasureSpec::from_density(GridFunction g) {
  MeasureSpec m;
  m.kind = Kind::density;
  m.density = std::move(g);
  m.validate();
  return m;
}

MeasureSpec MeasureSpec::from_atoms(std::vector<Atom> atoms) {
  MeasureSpec m;
  m.kind = Kind::atoms;
  m.atoms = std::move(atoms);
  m.validate();
  return m;
}

MeasureSpec MeasureSpec::from_radial(RadialFunction f, NormSpec norm) {
  MeasureSpec m;
  m.kind = Kind::radial_density;
  m.radial = std::move(f);
  m.radial_norm = std::move(norm);
  m.validate();
  return m;
}

MeasureSpec MeasureSpec::zero(int dimension) {
  Atom a;
  a.point = Vec::Zero(dimension);
  a.weight = 0.0;
  return from_atoms({a});
}

void MeasureSpec::validate() const {
  switch (kind) {
    case Kind::density:
      if (!density) throw InvalidSpec("density measure without a grid");
      density->require_finite();
      break;
    case Kind::atoms:
      if (atoms.empty()) throw InvalidSpec("atom measure needs at least one atom (weight 0 is allowed)");
      for (const auto& a : atoms) {
        if (!std::isfinite(a.weight)) throw InvalidSpec("atom weights must be finite");
        if (a.point.size() != atoms.front().point.size()) throw InvalidSpec("atoms of mixed dimension");
        if (!a.point.allFinite()) throw InvalidSpec("atom locations must be finite");
      }
      break;
    case Kind::radial_density:
      if (!radial || !radial_norm) throw InvalidSpec("radial density needs a function and a norm");
      break;
  }
}

int MeasureSpec::dimension() const {
  switch (kind) {
    case Kind::density: return density->shape.dim;
    case Kind::atoms: return static_cast<int>(atoms.front().point.size());
    case Kind::radial_density: return radial_norm->dimension();
  }
  return 0;
}

bool MeasureSpec::is_signed() const {
  switch (kind) {
    case Kind::density:
      return std::any_of(density->values.begin(), density->values.end(), [](double v) { return v < 0; });
    case Kind::atoms:
      return std::any_of(atoms.begin(), atoms.end(), [](const Atom& a) { return a.weight < 0; });
    case Kind::radial_density:
      if (radial->form == RadialFunction::Form::samples) {
        const auto& v = radial->profile->values();
        return std::any_of(v.begin(), v.end(), [](double x) { return x < 0; });
      }
      return radial->amplitude < 0;
  }
  return false;
}

namespace {

// Box lattice with log-integrand values; −∞ marks nodes outside the window.
struct Lattice {
  int dim = 0;
  std::array<int, 3> n{1, 1, 1};
  std::array<double, 3> lo{}, h{};
  std::vector<double> log_w;
  std::vector<double> h0;

  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  Vec point(std::size_t idx) const {
    Vec x(dim);
    for (int a = dim - 1; a >= 0; --a) {
      x[a] = lo[a] + h[a] * static_cast<double>(idx % n[a]);
      idx /= n[a];
    }
    return x;
  }
  double cell() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= h[a];
    return v;
  }
};

// Lattice h·k, k ∈ Z^N, covering H0 ≤ window.
Lattice origin_lattice(const NormSpec& norm, double window, double spacing) {
  Lattice L;
  L.dim = norm.dimension();
  if (L.dim > 3) throw InvalidSpec("growth functional supports N <= 3");
  for (int a = 0; a < L.dim; ++a) {
    Vec e = Vec::Zero(L.dim);
    e[a] = 1.0;
    const int k = static_cast<int>(std::ceil(window * norm(e) / spacing));
    L.n[a] = 2 * k + 1;
    L.lo[a] = -k * spacing;
    L.h[a] = spacing;
  }
  return L;
}

void fill_h0(Lattice& L, const NormSpec& norm, const DualEvalConfig& cfg) {
  const DualNorm h0(norm, cfg);
  L.h0.resize(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) L.h0[i] = h0(L.point(i));
}

// Ball offsets in index units: H0(Σ j_a h_a e_a) < radius.
std::vector<std::array<int, 3>> ball_offsets(const NormSpec& norm, const std::array<double, 3>& h,
                                             double radius, const DualEvalConfig& cfg) {
  const int dim = norm.dimension();
  const DualNorm h0(norm, cfg);
  std::array<int, 3> k{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    Vec e = Vec::Zero(dim);
    e[a] = 1.0;
    k[a] = static_cast<int>(std::ceil(radius * norm(e) / h[a]));
  }
  std::vector<std::array<int, 3>> out;
  for (int i = -k[0]; i <= k[0]; ++i) {
    for (int j = -k[1]; j <= k[1]; ++j) {
      for (int l = -k[2]; l <= k[2]; ++l) {
        Vec d(dim);
        const std::array<int, 3> o{i, j, l};
        for (int a = 0; a < dim; ++a) d[a] = o[a] * h[a];
        if (h0(d) < radius) out.push_back(o);
      }
    }
  }
  return out;
}

GrowthValue lattice_sup(const Lattice& L, const std::vector<std::array<int, 3>>& offsets, int stride,
                        const std::vector<std::uint8_t>& is_center) {
  GrowthValue out;
  double m = kNegInf;
  for (double v : L.log_w) m = std::max(m, v);
  if (m == kNegInf) {
    out.value = 0.0;
    out.argmax = Vec::Zero(L.dim);
    return out;
  }
  std::vector<double> w(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) w[i] = std::exp(L.log_w[i] - m);

  double best = -1.0;
  std::size_t best_idx = 0;
  std::array<int, 3> c{0, 0, 0};
  for (c[0] = 0; c[0] < L.n[0]; c[0] += (L.dim > 0 ? stride : 1)) {
    for (c[1] = 0; c[1] < L.n[1]; c[1] += (L.dim > 1 ? stride : 1)) {
      for (c[2] = 0; c[2] < L.n[2]; c[2] += (L.dim > 2 ? stride : 1)) {
        const std::size_t ci = (static_cast<std::size_t>(c[0]) * L.n[1] + c[1]) * L.n[2] + c[2];
        if (!is_center[ci]) continue;
        double s = 0.0;
        for (const auto& o : offsets) {
          const int i = c[0] + o[0], j = c[1] + o[1], l = c[2] + o[2];
          if (i < 0 || j < 0 || l < 0 || i >= L.n[0] || j >= L.n[1] || l >= L.n[2]) continue;
          s += w[(static_cast<std::size_t>(i) * L.n[1] + j) * L.n[2] + l];
        }
        if (s > best) {
          best = s;
          best_idx = ci;
        }
      }
    }
  }
  out.argmax = L.point(best_idx);
  if (best <= 0.0) {
    out.value = 0.0;
    return out;
  }
  out.log_value = m + std::log(best * L.cell());
  out.value = std::exp(out.log_value);
  return out;
}

std::array<double, 3> lattice_spacing(const Lattice& L) { return L.h; }

Lattice density_lattice(const GridFunction& g) {
  Lattice L;
  const auto& s = g.shape;
  L.dim = s.dim;
  for (int a = 0; a < s.dim; ++a) {
    L.n[a] = s.nodes(a);
    L.lo[a] = s.lo[a];
    L.h[a] = s.spacing(a);
  }
  return L;
}

}  // namespace

GrowthValue growth_functional(const MeasureSpec& mu, double lambda, const NormSpec& norm, double window,
                              const GrowthSampling& sampling, const DualEvalConfig& cfg) {
  mu.validate();
  if (!(lambda > 0.0)) throw InvalidSpec("growth functional needs Λ > 0");
  if (!(window > 0.0)) throw InvalidSpec("growth functional needs a positive window");
  if (!(sampling.spacing > 0.0) || sampling.center_stride < 1) throw InvalidSpec("invalid growth sampling");
  if (mu.dimension() != norm.dimension()) throw InvalidSpec("measure and norm dimensions differ");
  const double radius = 1.0 / std::sqrt(lambda);

  if (mu.kind == MeasureSpec::Kind::atoms) {
    const DualNorm h0(norm, cfg);
    Lattice L = origin_lattice(norm, window, sampling.spacing * sampling.center_stride);
    fill_h0(L, norm, cfg);
    std::vector<double> la;
    std::vector<Vec> pts;
    for (const auto& a : mu.atoms) {
      const double r = h0(a.point);
      if (r > window || a.weight == 0.0) continue;
      la.push_back(std::log(std::abs(a.weight)) - lambda * r * r);
      pts.push_back(a.point);
    }
    GrowthValue out;
    out.coverage_warning = window < radius;
    out.argmax = Vec::Zero(norm.dimension());
    double best = kNegInf;
    for (std::size_t ci = 0; ci < L.size(); ++ci) {
      if (L.h0[ci] > window) continue;
      const Vec c = L.point(ci);
      double m = kNegInf;
      std::vector<double> hit;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (h0(Vec(pts[k] - c)) < radius) {
          hit.push_back(la[k]);
          m = std::max(m, la[k]);
        }
      }
      if (hit.empty()) continue;
      double s = 0.0;
      for (double v : hit) s += std::exp(v - m);
      const double lv = m + std::log(s);
      if (lv > best) {
        best = lv;
        out.argmax = c;
      }
    }
    out.log_value = best;
    out.value = best == kNegInf ? 0.0 : std::exp(best);
    return out;
  }

  Lattice L;
  int stride = sampling.center_stride;
  if (mu.kind == MeasureSpec::Kind::density) {
    L = density_lattice(*mu.density);
    fill_h0(L, norm, cfg);
    L.log_w.resize(L.size());
    for (std::size_t i = 0; i < L.size(); ++i) {
      const double v = std::abs((*mu.density)[i]);
      L.log_w[i] = (L.h0[i] > window || v == 0.0) ? kNegInf : std::log(v) - lambda * L.h0[i] * L.h0[i];
    }
  } else {
    L = origin_lattice(norm, window, sampling.spacing);
    // Keep centers on the coarse sublattice through the origin.
    fill_h0(L, norm, cfg);
    L.log_w.resize(L.size());
    for (std::size_t i = 0; i < L.size(); ++i) {
      L.log_w[i] = L.h0[i] > window ? kNegInf : mu.radial->log_abs(L.h0[i]) - lambda * L.h0[i] * L.h0[i];
    }
  }
  std::vector<std::uint8_t> is_center(L.size(), 0);
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (L.h0[i] > window) continue;
    // Origin lattices have the origin at index k on every axis; align the centers with it.
    std::size_t idx = i;
    bool on = true;
    for (int a = L.dim - 1; a >= 0; --a) {
      const auto k = static_cast<long>(idx % L.n[a]);
      idx /= L.n[a];
      const long anchor = mu.kind == MeasureSpec::Kind::density ? 0 : (L.n[a] - 1) / 2;
      on = on && ((k - anchor) % stride == 0);
    }
    is_center[i] = on ? 1 : 0;
  }
  const auto offsets = ball_offsets(norm, lattice_spacing(L), radius, cfg);
  GrowthValue out = lattice_sup(L, offsets, 1, is_center);
  out.coverage_warning = window < radius;
  return out;
}

double growth_integral(const MeasureSpec& mu, double lambda, const NormSpec& norm, const Vec& center,
                       double radius, const GrowthSampling& sampling, const DualEvalConfig& cfg) {
  mu.validate();
  check_dimension(norm, center);
  const DualNorm h0(norm, cfg);
  double s = 0.0;
  switch (mu.kind) {
    case MeasureSpec::Kind::atoms:
      for (const auto& a : mu.atoms) {
        if (h0(Vec(a.point - center)) < radius) {
          const double r = h0(a.point);
          s += std::abs(a.weight) * std::exp(-lambda * r * r);
        }
      }
      return s;
    case MeasureSpec::Kind::density: {
      const auto& g = *mu.density;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec y = g.shape.point(i);
        if (h0(Vec(y - center)) < radius) {
          const double r = h0(y);
          s += std::abs(g[i]) * std::exp(-lambda * r * r);
        }
      }
      return s * g.shape.cell_volume();
    }
    case MeasureSpec::Kind::radial_density: {
      Lattice L = origin_lattice(norm, radius, sampling.spacing);
      for (std::size_t i = 0; i < L.size(); ++i) {
        const Vec d = L.point(i);
        if (h0(d) >= radius) continue;
        const double r = h0(Vec(center + d));
        s += std::exp(mu.radial->log_abs(r) - lambda * r * r);
      }
      return s * L.cell();
    }
  }
  return s;
}

Classification classify(const MeasureSpec& mu, const NormSpec& norm, const std::vector<double>& lambda_grid,
                        const ClassifyOptions& options, const DualEvalConfig& cfg) {
  if (lambda_grid.empty()) throw InvalidSpec("classify needs a non-empty Λ grid");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > lambda_grid[i - 1])) throw InvalidSpec("Λ grid must be increasing");
  }
  if (options.windows.size() < 2) throw InvalidSpec("classify needs at least two windows");
  for (std::size_t i = 1; i < options.windows.size(); ++i) {
    if (!(options.windows[i] > options.windows[i - 1])) throw InvalidSpec("windows must be increasing");
  }
  if (!(options.threshold > 0.0)) throw InvalidSpec("classify threshold must be positive");

  Classification out;
  for (double lambda : lambda_grid) {
    double prev_log = kNegInf;
    bool last_stable = false;
    for (std::size_t w = 0; w < options.windows.size(); ++w) {
      const auto g = growth_functional(mu, lambda, norm, options.windows[w], options.sampling, cfg);
      ClassifyRow row;
      row.lambda = lambda;
      row.window = options.windows[w];
      row.value = g.value;
      row.log_value = g.log_value;
      if (w > 0) {
        if (g.log_value == kNegInf && prev_log == kNegInf) {
          row.stabilized = true;
        } else if (std::isfinite(g.log_value) && std::isfinite(prev_log)) {
          row.stabilized = std::abs(std::expm1(g.log_value - prev_log)) <= options.threshold;
        }
      }
      last_stable = row.stabilized;
      prev_log = g.log_value;
      out.table.push_back(row);
    }
    if (last_stable && !out.admissible) {
      out.admissible = true;
      out.lambda_star = lambda;
      out.s_star = 1.0 / (4.0 * lambda);
    }
  }
  return out;
}

GridFunction mollify(const MeasureSpec& mu, const NormSpec& norm, const GridShape& shape, double width,
                     const DualEvalConfig& cfg) {
  mu.validate();
  shape.validate();
  if (norm.dimension() != shape.dim || mu.dimension() != shape.dim) {
    throw InvalidSpec("measure, norm and grid dimensions differ");
  }
  if (!(width >= 2.0 * shape.max_spacing() * (1.0 - 1e-12))) throw InvalidSpec("mollifier width must be >= 2h");

  struct Source {
    Vec point;
    double mass;
  };
  std::vector<Source> sources;
  switch (mu.kind) {
    case MeasureSpec::Kind::atoms:
      for (const auto& a : mu.atoms) {
        if (a.weight != 0.0) sources.push_back({a.point, a.weight});
      }
      break;
    case MeasureSpec::Kind::density: {
      const auto& g = *mu.density;
      const double vol = g.shape.cell_volume();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] != 0.0) sources.push_back({g.shape.point(i), g[i] * vol});
      }
      break;
    }
    case MeasureSpec::Kind::radial_density: {
      const DualNorm h0(*mu.radial_norm, cfg);
      const double vol = shape.cell_volume();
      for (std::size_t i = 0; i < shape.size(); ++i) {
        const Vec x = shape.point(i);
        const double v = (*mu.radial)(h0(x));
        if (v != 0.0) sources.push_back({x, v * vol});
      }
      break;
    }
  }

  const DualNorm h0(norm, cfg);
  std::array<double, 3> reach{};
  for (int a = 0; a < shape.dim; ++a) {
    Vec e = Vec::Zero(shape.dim);
    e[a] = 1.0;
    reach[a] = width * norm(e);
  }
  GridFunction out(shape);
  const double vol = shape.cell_volume();
  std::vector<std::pair<std::size_t, double>> hits;
  for (const auto& src : sources) {
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < shape.dim; ++a) {
      const double h = shape.spacing(a);
      lo[a] = std::max(0, static_cast<int>(std::floor((src.point[a] - reach[a] - shape.lo[a]) / h)));
      hi[a] = std::min(shape.cells[a], static_cast<int>(std::ceil((src.point[a] + reach[a] - shape.lo[a]) / h)));
    }
    hits.clear();
    double total = 0.0;
    std::array<int, 3> k{0, 0, 0};
    for (k[0] = lo[0]; k[0] <= hi[0]; ++k[0]) {
      for (k[1] = lo[1]; k[1] <= hi[1]; ++k[1]) {
        for (k[2] = lo[2]; k[2] <= hi[2]; ++k[2]) {
          const std::size_t idx = shape.ravel(k);
          const double s = h0(Vec(shape.point(idx) - src.point)) / width;
          if (s >= 1.0) continue;
          const double w = std::exp(-1.0 / (1.0 - s * s));
          hits.emplace_back(idx, w);
          total += w;
        }
      }
    }
    if (!(total > 0.0)) throw DomainError("a point mass lies outside the grid; its mass cannot be kept");
    for (const auto& [idx, w] : hits) out[idx] += src.mass * (w / total) / vol;
  }
  return out;
}

double smooth_cutoff(double h0, double m) {
  if (!(m > 0.0)) throw InvalidSpec("cutoff radius must be positive");
  auto f = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double s = h0 / m;
  const double a = f(1.0 - s), b = f(s - 0.5);
  return a / (a + b);
}

}  // namespace finsler
