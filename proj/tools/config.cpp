#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace finsler::cli {

namespace {

std::string at(const std::string& where, const char* key) { return where + "." + key; }

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(at(where, key) + " is required");
  return j.at(key);
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  return v.get<double>();
}

}  // namespace

void require_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key " + where + "." + key);
    }
  }
}

double get_number(const json& j, const char* key, const std::string& where) {
  return as_number(member(j, key, where), at(where, key));
}

double get_number(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? as_number(j.at(key), at(where, key)) : fallback;
}

int get_int(const json& j, const char* key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(at(where, key) + " must be an integer");
  return v.get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(at(where, key) + " must be true or false");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  const json& v = member(j, key, where);
  if (!v.is_string()) throw ConfigError(at(where, key) + " must be a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const char* key, const std::string& where) {
  const json& v = member(j, key, where);
  if (!v.is_array()) throw ConfigError(at(where, key) + " must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) out.push_back(as_number(e, at(where, key)));
  return out;
}

Vec to_vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDimension)) {
    throw ConfigError(where + " must be an array of 1 to 8 numbers");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], where);
  return v;
}

NormSpec parse_norm(const json& j, const std::string& where) {
  require_keys(j, {"family", "dimension", "p", "matrix", "directions", "epsilon", "exponent"}, where);
  const auto family = norm_family_from_string(get_string(j, "family", where));
  switch (family) {
    case NormFamily::euclidean:
      require_keys(j, {"family", "dimension"}, where);
      return NormSpec::euclidean(get_int(j, "dimension", 2, where));
    case NormFamily::p_norm:
      require_keys(j, {"family", "dimension", "p"}, where);
      return NormSpec::p_norm(get_int(j, "dimension", 2, where), get_number(j, "p", where));
    case NormFamily::ellipse: {
      require_keys(j, {"family", "matrix"}, where);
      const json& rows = member(j, "matrix", where);
      if (!rows.is_array() || rows.empty()) throw ConfigError(where + ".matrix must be a square array");
      const auto n = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd m(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        const Vec row = to_vec(rows[static_cast<std::size_t>(r)], where + ".matrix");
        if (row.size() != n) throw ConfigError(where + ".matrix must be square");
        m.row(r) = row.transpose();
      }
      return NormSpec::ellipse(m);
    }
    case NormFamily::smoothed_polytope: {
      require_keys(j, {"family", "directions", "epsilon", "exponent"}, where);
      const json& dirs = member(j, "directions", where);
      if (!dirs.is_array()) throw ConfigError(where + ".directions must be an array of vectors");
      std::vector<Vec> d;
      for (const json& e : dirs) d.push_back(to_vec(e, where + ".directions"));
      return NormSpec::smoothed_polytope(d, get_number(j, "epsilon", where),
                                         get_number(j, "exponent", kDefaultPolytopeExponent, where));
    }
    case NormFamily::custom:
      break;
  }
  throw ConfigError(where + ".family: custom norms cannot be configured from JSON");
}

json norm_to_json(const NormSpec& norm) {
  json j;
  j["family"] = std::string(to_string(norm.family()));
  switch (norm.family()) {
    case NormFamily::euclidean:
      j["dimension"] = norm.dimension();
      break;
    case NormFamily::p_norm:
      j["dimension"] = norm.dimension();
      j["p"] = norm.p();
      break;
    case NormFamily::ellipse: {
      json rows = json::array();
      for (Eigen::Index r = 0; r < norm.matrix().rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < norm.matrix().cols(); ++c) row.push_back(norm.matrix()(r, c));
        rows.push_back(row);
      }
      j["matrix"] = rows;
      break;
    }
    case NormFamily::smoothed_polytope: {
      json dirs = json::array();
      for (const Vec& d : norm.directions()) dirs.push_back(std::vector<double>(d.data(), d.data() + d.size()));
      j["directions"] = dirs;
      j["epsilon"] = norm.epsilon();
      j["exponent"] = norm.exponent();
      break;
    }
    case NormFamily::custom:
      throw ConfigError("custom norms have no JSON form");
  }
  return j;
}

GridShape parse_grid(const json& j, const std::string& where) {
  require_keys(j, {"lo", "hi", "cells"}, where);
  const auto lo = get_numbers(j, "lo", where);
  const auto hi = get_numbers(j, "hi", where);
  const auto cells = get_numbers(j, "cells", where);
  if (lo.empty() || lo.size() > static_cast<std::size_t>(kMaxGridDimension) || hi.size() != lo.size() ||
      cells.size() != lo.size()) {
    throw ConfigError(where + ": lo, hi and cells need the same length 1..3");
  }
  GridShape s;
  s.dim = static_cast<int>(lo.size());
  for (int a = 0; a < s.dim; ++a) {
    if (cells[a] != std::floor(cells[a])) throw ConfigError(where + ".cells must be integers");
    s.lo[a] = lo[a];
    s.hi[a] = hi[a];
    s.cells[a] = static_cast<int>(cells[a]);
  }
  s.validate();
  return s;
}

RadialFunction parse_radial_function(const json& j, const std::string& where) {
  require_keys(j, {"form", "amplitude", "coeff", "exponent", "radius", "radii", "values", "even"}, where);
  using Form = RadialFunction::Form;
  const Form form = radial_form_from_string(get_string(j, "form", where));
  const double a = get_number(j, "amplitude", 1.0, where);
  switch (form) {
    case Form::constant:
      require_keys(j, {"form", "amplitude"}, where);
      return RadialFunction::constant(a);
    case Form::gaussian:
      require_keys(j, {"form", "amplitude", "coeff"}, where);
      return RadialFunction::gaussian(a, get_number(j, "coeff", where));
    case Form::exp_power:
      require_keys(j, {"form", "amplitude", "coeff", "exponent"}, where);
      return RadialFunction::exp_power(a, get_number(j, "coeff", where), get_number(j, "exponent", where));
    case Form::bump:
      require_keys(j, {"form", "amplitude", "radius"}, where);
      return RadialFunction::bump(a, get_number(j, "radius", where));
    case Form::samples:
      require_keys(j, {"form", "radii", "values", "even"}, where);
      return RadialFunction::samples(
          RadialProfile(get_numbers(j, "radii", where), get_numbers(j, "values", where), get_bool(j, "even", true, where)));
  }
  throw ConfigError(where + ".form is not supported");
}

MeasureSpec parse_measure(const json& j, const NormSpec& norm, const std::string& base_dir, const std::string& where) {
  require_keys(j, {"kind", "function", "atoms", "dump"}, where);
  const std::string kind = get_string(j, "kind", where);
  if (kind == "zero") {
    require_keys(j, {"kind"}, where);
    return MeasureSpec::zero(norm.dimension());
  }
  if (kind == "radial") {
    require_keys(j, {"kind", "function"}, where);
    return MeasureSpec::from_radial(parse_radial_function(member(j, "function", where), where + ".function"), norm);
  }
  if (kind == "atoms") {
    require_keys(j, {"kind", "atoms"}, where);
    const json& list = member(j, "atoms", where);
    if (!list.is_array()) throw ConfigError(where + ".atoms must be an array of [point, weight] pairs");
    std::vector<Atom> atoms;
    for (const json& e : list) {
      if (!e.is_array() || e.size() != 2) throw ConfigError(where + ".atoms entries are [point, weight] pairs");
      atoms.push_back({to_vec(e[0], where + ".atoms"), as_number(e[1], where + ".atoms")});
    }
    MeasureSpec mu = MeasureSpec::from_atoms(std::move(atoms));
    mu.validate();
    return mu;
  }
  if (kind == "density") {
    require_keys(j, {"kind", "dump"}, where);
    std::filesystem::path p = get_string(j, "dump", where);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return MeasureSpec::from_density(read_binary(p.string()));
  }
  throw ConfigError(where + ".kind must be one of zero, radial, atoms, density");
}

DualEvalConfig parse_dual(const json& j, std::uint64_t seed, const std::string& where) {
  DualEvalConfig cfg;
  cfg.seed = seed;
  if (j.is_null()) return cfg;
  require_keys(j, {"method", "sphere_samples", "refinement_iters", "tolerance"}, where);
  if (j.contains("method")) {
    const std::string m = get_string(j, "method", where);
    if (m == "closed_form") {
      cfg.method = DualMethod::closed_form;
    } else if (m == "sphere_maximization") {
      cfg.method = DualMethod::sphere_maximization;
    } else {
      throw ConfigError(where + ".method must be closed_form or sphere_maximization");
    }
  }
  cfg.sphere_samples = get_int(j, "sphere_samples", cfg.sphere_samples, where);
  cfg.refinement_iters = get_int(j, "refinement_iters", cfg.refinement_iters, where);
  cfg.tolerance = get_number(j, "tolerance", cfg.tolerance, where);
  return cfg;
}

InnerSolverOptions parse_inner(const json& j, const std::string& where) {
  InnerSolverOptions o;
  if (j.is_null()) return o;
  require_keys(j, {"tolerance", "max_iters"}, where);
  o.tolerance = get_number(j, "tolerance", o.tolerance, where);
  o.max_iters = get_int(j, "max_iters", o.max_iters, where);
  o.validate();
  return o;
}

SphereIntegralConfig parse_quadrature(const json& j, int dimension, const std::string& where) {
  SphereIntegralConfig cfg = SphereIntegralConfig::defaults(dimension);
  if (j.is_null()) return cfg;
  require_keys(j, {"kind", "nodes", "series_terms"}, where);
  const int nodes = get_int(j, "nodes", cfg.rule.size(), where);
  const QuadratureKind kind =
      j.contains("kind") ? quadrature_kind_from_string(get_string(j, "kind", where)) : cfg.rule.kind;
  cfg.rule = kind == QuadratureKind::gauss_legendre ? QuadratureRule::gauss_legendre(nodes)
                                                    : QuadratureRule::chebyshev_gauss(nodes);
  cfg.series_terms = get_int(j, "series_terms", cfg.series_terms, where);
  cfg.validate();
  return cfg;
}

RadialSolveOptions parse_radial_options(const json& j, const std::string& where) {
  RadialSolveOptions o;
  if (j.is_null()) return o;
  require_keys(j, {"tolerance", "tail_tolerance", "nodes_per_panel", "max_doublings"}, where);
  o.tolerance = get_number(j, "tolerance", o.tolerance, where);
  o.tail_tolerance = get_number(j, "tail_tolerance", o.tail_tolerance, where);
  o.nodes_per_panel = get_int(j, "nodes_per_panel", o.nodes_per_panel, where);
  o.max_doublings = get_int(j, "max_doublings", o.max_doublings, where);
  if (!(o.tolerance > 0.0) || !(o.tail_tolerance > 0.0) || o.nodes_per_panel < 2 || o.max_doublings < 0) {
    throw ConfigError(where + ": tolerances must be positive, nodes_per_panel >= 2, max_doublings >= 0");
  }
  return o;
}

GrowthSampling parse_sampling(const json& j, const std::string& where) {
  GrowthSampling s;
  if (j.is_null()) return s;
  require_keys(j, {"spacing", "center_stride"}, where);
  s.spacing = get_number(j, "spacing", s.spacing, where);
  s.center_stride = get_int(j, "center_stride", s.center_stride, where);
  if (!(s.spacing > 0.0) || s.center_stride < 1) throw ConfigError(where + ": spacing > 0 and center_stride >= 1");
  return s;
}

}  // namespace finsler::cli
