#pragma once

#include "finsler/dual.hpp"
#include "finsler/error.hpp"
#include "finsler/flow_solver.hpp"
#include "finsler/initial_data.hpp"
#include "finsler/radial_engine.hpp"

#include <json.hpp>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finsler::cli {

using json = nlohmann::json;

/// Malformed or out-of-schema experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Throws ConfigError unless `j` is an object whose keys all appear in `allowed`.
void require_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where);

double get_number(const json& j, const char* key, const std::string& where);
double get_number(const json& j, const char* key, double fallback, const std::string& where);
int get_int(const json& j, const char* key, int fallback, const std::string& where);
bool get_bool(const json& j, const char* key, bool fallback, const std::string& where);
std::string get_string(const json& j, const char* key, const std::string& where);
std::vector<double> get_numbers(const json& j, const char* key, const std::string& where);
Vec to_vec(const json& j, const std::string& where);

/// {"family": "euclidean" | "p_norm" | "ellipse" | "smoothed_polytope", ...}
NormSpec parse_norm(const json& j, const std::string& where = "norm");
/// {"lo": [...], "hi": [...], "cells": [...]}
GridShape parse_grid(const json& j, const std::string& where = "grid");
/// {"form": "constant" | "gaussian" | "exp_power" | "bump" | "samples", ...}
RadialFunction parse_radial_function(const json& j, const std::string& where = "function");
/// {"kind": "zero" | "atoms" | "radial" | "density", ...}; radial densities use `norm`, density
/// dumps are resolved relative to `base_dir`.
MeasureSpec parse_measure(const json& j, const NormSpec& norm, const std::string& base_dir,
                          const std::string& where = "measure");
DualEvalConfig parse_dual(const json& j, std::uint64_t seed, const std::string& where = "dual");
InnerSolverOptions parse_inner(const json& j, const std::string& where = "inner");
SphereIntegralConfig parse_quadrature(const json& j, int dimension, const std::string& where = "quadrature");
RadialSolveOptions parse_radial_options(const json& j, const std::string& where = "options");
GrowthSampling parse_sampling(const json& j, const std::string& where = "sampling");

/// Inverse of parse_norm for the built-in families.
json norm_to_json(const NormSpec& norm);

}  // namespace finsler::cli
