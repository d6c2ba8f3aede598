#include "commands.hpp"

#include "finsler/error.hpp"
#include "finsler/exact_solutions.hpp"
#include "finsler/finsler_operator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iterator>
#include <limits>
#include <sstream>

namespace finsler::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json opt(const json& j, const char* key) { return j.contains(key) ? j.at(key) : json(); }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void say(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

std::string fmt(double v) { return format_double(v); }

std::string pass_word(bool ok) { return ok ? "pass" : "fail"; }

std::uint64_t require_seed(const json& cfg, const RunContext& ctx, const char* command) {
  if (ctx.seed) return *ctx.seed;
  if (cfg.contains("seed")) {
    if (!cfg.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    return cfg.at("seed").get<std::uint64_t>();
  }
  throw ConfigError(std::string(command) + " samples at random: pass --seed or set \"seed\" in the config");
}

std::uint64_t optional_seed(const json& cfg, const RunContext& ctx) {
  if (ctx.seed) return *ctx.seed;
  if (cfg.contains("seed")) {
    if (!cfg.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    return cfg.at("seed").get<std::uint64_t>();
  }
  return DualEvalConfig{}.seed;
}

std::vector<std::string> coordinate_names(int dim) {
  std::vector<std::string> names;
  for (int a = 0; a < dim; ++a) names.push_back("x" + std::to_string(a));
  return names;
}

// ---------------------------------------------------------------- verify-norms

json default_norms() {
  return json::array({
      {{"family", "euclidean"}, {"dimension", 2}},
      {{"family", "p_norm"}, {"dimension", 2}, {"p", 1.5}},
      {{"family", "p_norm"}, {"dimension", 2}, {"p", 2.0}},
      {{"family", "p_norm"}, {"dimension", 2}, {"p", 3.0}},
      {{"family", "p_norm"}, {"dimension", 2}, {"p", 4.0}},
      {{"family", "ellipse"}, {"matrix", {{4.0, 0.0}, {0.0, 1.0}}}},
      {{"family", "ellipse"}, {"matrix", {{3.0, 1.2}, {1.2, 1.5}}}},
      {{"family", "smoothed_polytope"}, {"directions", {{1.0, 0.0}, {0.0, 1.0}}}, {"epsilon", 0.05}},
  });
}

// ---------------------------------------------------------------- verify-exact

json default_exact_cases() {
  const json euclid = {{"family", "euclidean"}, {"dimension", 2}};
  const json ellipse = {{"family", "ellipse"}, {"matrix", {{4.0, 0.0}, {0.0, 1.0}}}};
  const json square3 = {{"lo", {-3.0, -3.0}}, {"hi", {3.0, 3.0}}, {"cells", {48, 48}}};
  return json::array({
      {{"family", "gauss_kernel"}, {"norm", euclid}, {"grid", square3}, {"t", 0.5}, {"dt", 0.02}},
      {{"family", "gauss_kernel"}, {"norm", ellipse}, {"grid", square3}, {"t", 0.5}, {"dt", 0.02}},
      {{"family", "blowup"},
       {"norm", euclid},
       {"lambda", 0.25},
       {"grid", {{"lo", {-1.5, -1.5}}, {"hi", {1.5, 1.5}}, {"cells", {48, 48}}}},
       {"times", {0.25, 0.5, 0.75}},
       {"dt", 0.02},
       {"window", {{"r_max", 1.0}}}},
      {{"family", "talenti"},
       {"norm", euclid},
       {"p", 3.0},
       {"A", 1.0},
       {"B", 1.0},
       {"grid", {{"lo", {-2.0, -2.0}}, {"hi", {2.0, 2.0}}, {"cells", {64, 64}}}},
       {"window", {{"r_min", 0.25}, {"r_max", 1.5}}}},
      {{"family", "barenblatt"},
       {"norm", {{"family", "euclidean"}, {"dimension", 1}}},
       {"m", 2.0},
       {"C", 1.0},
       {"grid", {{"lo", {-6.0}}, {"hi", {6.0}}, {"cells", {200}}}},
       {"t", 1.0},
       {"dt", 0.02}},
      {{"family", "singular_poly"},
       {"norm", ellipse},
       {"m_order", 1},
       {"grid", {{"lo", {-1.5, -1.5}}, {"hi", {1.5, 1.5}}, {"cells", {128, 128}}}},
       {"window", {{"r_min", 0.25}, {"r_max", 1.0}}}},
  });
}

SolutionSpec build_solution(const json& c, const NormSpec& norm, const std::string& where) {
  const SolutionKind kind = solution_kind_from_string(get_string(c, "family", where));
  switch (kind) {
    case SolutionKind::gauss_kernel:
      return SolutionSpec::gauss_kernel(norm);
    case SolutionKind::blowup:
      return SolutionSpec::blowup(norm, get_number(c, "lambda", 0.25, where));
    case SolutionKind::barenblatt:
      return SolutionSpec::barenblatt(norm, get_number(c, "m", 2.0, where), get_number(c, "C", 1.0, where));
    case SolutionKind::talenti:
      return SolutionSpec::talenti(norm, get_number(c, "p", 3.0, where), get_number(c, "A", 1.0, where),
                                   get_number(c, "B", 1.0, where));
    case SolutionKind::singular_poly:
      return SolutionSpec::singular_poly(norm, get_int(c, "m_order", 1, where));
  }
  throw ConfigError(where + ".family is not supported");
}

ResidualWindow parse_window(const json& j, const std::string& where) {
  ResidualWindow w;
  if (j.is_null()) return w;
  require_keys(j, {"r_min", "r_max", "free_boundary_band"}, where);
  w.r_min = get_number(j, "r_min", w.r_min, where);
  w.r_max = get_number(j, "r_max", w.r_max, where);
  w.free_boundary_band = get_number(j, "free_boundary_band", w.free_boundary_band, where);
  return w;
}

std::pair<double, double> default_order_band(SolutionKind kind) {
  switch (kind) {
    case SolutionKind::barenblatt:
      return {1.0, kInf};
    case SolutionKind::singular_poly:
      return {1.5, kInf};
    default:
      return {1.8, 2.2};
  }
}

// ---------------------------------------------------------------- simulate

struct Reference {
  std::string kind;  // "gaussian" or "representation"
  double r_max = 2.0;
  bool relative = true;
  double tolerance = kInf;
  double profile_r_max = 30.0;
  int profile_samples = 6001;
  SphereIntegralConfig quadrature;
  RadialSolveOptions options;
};

double gaussian_heat(const RadialFunction& f, int dim, double r, double t) {
  const double s = 1.0 + 4.0 * f.coeff * t;
  return f.amplitude * std::pow(s, -0.5 * dim) * std::exp(-f.coeff * r * r / s);
}

RadialProfile profile_of(const RadialFunction& f, double r_max, int samples) {
  if (f.form == RadialFunction::Form::samples) return *f.profile;
  return RadialProfile::sample([&](double r) { return f(r); }, r_max, samples);
}

}  // namespace

// ---------------------------------------------------------------- CsvWriter

std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvWriter::CsvWriter(const RunContext& ctx, std::string_view command, const std::string& file) {
  fs::create_directories(ctx.out_dir);
  const fs::path p = fs::path(ctx.out_dir) / file;
  os_.open(p, std::ios::binary | std::ios::trunc);
  if (!os_) throw ConfigError("cannot write " + p.string());
  if (ctx.timestamp) os_ << "# finsler " << command << ' ' << utc_now() << '\n';
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) cell(std::string_view(c));
  end_row();
}

void CsvWriter::sep() {
  if (!first_) os_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  os_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  sep();
  os_ << csv_quote(s);
  return *this;
}

CsvWriter& CsvWriter::cell(bool pass) { return cell(std::string_view(pass ? "pass" : "fail")); }

CsvWriter& CsvWriter::cell(long long v) {
  sep();
  os_ << v;
  return *this;
}

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

// ---------------------------------------------------------------- commands

int cmd_verify_norms(const json& cfg_in, const RunContext& ctx) {
  const json cfg = cfg_in.is_null() ? json::object() : cfg_in;
  require_keys(cfg, {"norms", "samples", "tolerances", "dual", "seed"}, "config");
  const std::uint64_t seed = require_seed(cfg, ctx, "verify-norms");
  const int samples = get_int(cfg, "samples", 1000, "config");
  if (samples < 1) throw ConfigError("config.samples must be >= 1");
  const json tol = cfg.contains("tolerances") ? cfg.at("tolerances") : json::object();
  require_keys(tol, {"inequality", "unit_closed", "unit_numeric", "inversion"}, "config.tolerances");
  const double tol_ineq = get_number(tol, "inequality", 1e-10, "config.tolerances");
  const double tol_unit_closed = get_number(tol, "unit_closed", 1e-8, "config.tolerances");
  const double tol_unit_numeric = get_number(tol, "unit_numeric", 1e-5, "config.tolerances");
  const double tol_inv = get_number(tol, "inversion", 1e-6, "config.tolerances");
  const DualEvalConfig dual = parse_dual(opt(cfg, "dual"), seed);

  std::vector<NormSpec> norms;
  const json list = cfg.contains("norms") ? cfg.at("norms") : default_norms();
  if (!list.is_array() || list.empty()) throw ConfigError("config.norms must be a non-empty array");
  for (std::size_t i = 0; i < list.size(); ++i) norms.push_back(parse_norm(list[i], "config.norms[" + std::to_string(i) + "]"));

  CsvWriter csv(ctx, "verify-norms", "verify_norms.csv");
  csv.header({"norm", "numeric_dual", "samples", "duality_inequality", "primal_unit", "dual_unit", "primal_inversion",
              "dual_inversion", "duality_equality", "primal_euler", "dual_euler", "map_square", "map_dual", "c1", "c2",
              "pass"});
  int failures = 0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const IdentityReport r = verify_identities(norms[i], samples, dual, seed + i);
    const double tol_unit = r.numeric_dual ? tol_unit_numeric : tol_unit_closed;
    const bool ok = r.duality_inequality <= tol_ineq && r.primal_unit <= tol_unit && r.dual_unit <= tol_unit &&
                    r.primal_inversion <= tol_inv && r.dual_inversion <= tol_inv;
    failures += ok ? 0 : 1;
    csv.cell(norms[i].describe()).cell(std::string_view(r.numeric_dual ? "yes" : "no")).cell(static_cast<long long>(r.samples));
    for (double v : {r.duality_inequality, r.primal_unit, r.dual_unit, r.primal_inversion, r.dual_inversion,
                     r.duality_equality, r.primal_euler, r.dual_euler, r.map_square, r.map_dual, r.c1, r.c2}) {
      csv.cell(v);
    }
    csv.cell(ok).end_row();
    say(ctx, norms[i].describe() + ": " + pass_word(ok));
  }
  say(ctx, "verify-norms: " + std::to_string(norms.size()) + " norms, " + std::to_string(failures) + " failing");
  return failures == 0 ? kPass : kCheckFailed;
}

int cmd_verify_exact(const json& cfg_in, const RunContext& ctx) {
  const json cfg = cfg_in.is_null() ? json::object() : cfg_in;
  require_keys(cfg, {"cases", "seed"}, "config");
  const json cases = cfg.contains("cases") ? cfg.at("cases") : default_exact_cases();
  if (!cases.is_array() || cases.empty()) throw ConfigError("config.cases must be a non-empty array");

  CsvWriter csv(ctx, "verify-exact", "verify_exact.csv");
  csv.header({"family", "norm", "check", "t", "h", "dt", "residual", "order", "pass"});
  int failures = 0;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const json& c = cases[ci];
    const std::string where = "config.cases[" + std::to_string(ci) + "]";
    require_keys(c,
                 {"family", "norm", "grid", "t", "times", "dt", "refinements", "window", "lambda", "m", "C", "p", "A",
                  "B", "m_order", "min_order", "max_order"},
                 where);
    const NormSpec norm = parse_norm(c.contains("norm") ? c.at("norm") : json{{"family", "euclidean"}, {"dimension", 2}},
                                     where + ".norm");
    const SolutionSpec sol = build_solution(c, norm, where);
    const GridShape grid = parse_grid(c.contains("grid") ? c.at("grid") : json(), where + ".grid");
    const ResidualWindow window = parse_window(opt(c, "window"), where + ".window");
    const auto band = default_order_band(sol.kind);
    const double min_order = get_number(c, "min_order", band.first, where);
    const double max_order = get_number(c, "max_order", band.second, where);
    const int refinements = get_int(c, "refinements", 1, where);
    const std::string family(to_string(sol.kind));
    const std::string tag = norm.describe();

    if (sol.kind == SolutionKind::singular_poly) {
      const double r_min = window.r_min > 0.0 ? window.r_min : 0.25;
      const double r_max = std::isfinite(window.r_max) ? window.r_max : 1.0;
      std::vector<SingularReport> levels;
      GridShape g = grid;
      for (int l = 0; l <= std::max(1, refinements); ++l) {
        levels.push_back(singular_poly_check(sol, g, r_min, r_max));
        g = g.refined();
      }
      const double order = std::log2(levels[levels.size() - 2].max_residual / levels.back().max_residual);
      const bool ok = order >= min_order && order <= max_order;
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const double o = l == 0 ? kNaN : std::log2(levels[l - 1].max_residual / levels[l].max_residual);
        csv.cell(family).cell(tag).cell(std::string_view("residual")).cell(kNaN).cell(levels[l].h).cell(kNaN);
        csv.cell(levels[l].max_residual).cell(o).cell(std::string_view("")).end_row();
      }
      csv.cell(family).cell(tag).cell(std::string_view("order")).cell(kNaN).cell(levels.back().h).cell(kNaN);
      csv.cell(levels.back().max_residual).cell(order).cell(ok).end_row();
      failures += ok ? 0 : 1;
      say(ctx, family + " " + tag + ": order " + fmt(order) + " " + pass_word(ok));
      continue;
    }

    std::vector<double> times;
    if (c.contains("times")) {
      times = get_numbers(c, "times", where);
    } else {
      times.push_back(get_number(c, "t", sol.stationary() ? 0.0 : 0.5, where));
    }
    const double dt = get_number(c, "dt", 0.02, where);
    for (double t : times) {
      const ResidualReport rep = residual_study(sol, grid, t, dt, refinements, window);
      for (std::size_t l = 0; l < rep.levels.size(); ++l) {
        const auto& lv = rep.levels[l];
        const double o = l == 0 ? kNaN : std::log2(rep.levels[l - 1].max_residual / lv.max_residual);
        csv.cell(family).cell(tag).cell(std::string_view("residual")).cell(t).cell(lv.h).cell(lv.dt);
        csv.cell(lv.max_residual).cell(o).cell(std::string_view("")).end_row();
      }
      const bool ok = rep.order >= min_order && rep.order <= max_order;
      failures += ok ? 0 : 1;
      csv.cell(family).cell(tag).cell(std::string_view("order")).cell(t).cell(rep.levels.back().h);
      csv.cell(rep.levels.back().dt).cell(rep.levels.back().max_residual).cell(rep.order).cell(ok).end_row();
      say(ctx, family + " " + tag + " t=" + fmt(t) + ": order " + fmt(rep.order) + " " + pass_word(ok));

      if (sol.kind == SolutionKind::blowup) {
        // min over the grid sits at the node closest to the origin and equals v(0, t) there
        const GridFunction h0 = dual_norm_field(norm, grid);
        const GridFunction v = eval_on_grid(sol, h0, t);
        const auto it = std::min_element(v.values.begin(), v.values.end());
        const auto closest = std::min_element(h0.values.begin(), h0.values.end());
        const double v0 = eval_profile(sol, 0.0, t);
        const double gap = (*it - v0) / v0;
        const bool min_ok = gap >= -1e-15 && *it == v[static_cast<std::size_t>(closest - h0.values.begin())];
        failures += min_ok ? 0 : 1;
        csv.cell(family).cell(tag).cell(std::string_view("min_at_origin")).cell(t).cell(grid.max_spacing());
        csv.cell(kNaN).cell(gap).cell(kNaN).cell(min_ok).end_row();
      }
    }
  }
  say(ctx, "verify-exact: " + std::to_string(failures) + " failing checks");
  return failures == 0 ? kPass : kCheckFailed;
}

int cmd_simulate(const json& cfg, const RunContext& ctx) {
  if (cfg.is_null()) throw ConfigError("simulate needs --config");
  require_keys(cfg,
               {"norm", "radius", "spacing", "scheme", "tau", "end_time", "datum", "measure", "mollifier_width",
                "stamps", "inner", "monitors", "dual", "compare", "checks", "write_slices", "seed"},
               "config");
  FlowProblem p;
  p.norm = parse_norm(cfg.contains("norm") ? cfg.at("norm") : json(), "config.norm");
  p.radius = get_number(cfg, "radius", "config");
  p.spacing = get_number(cfg, "spacing", "config");
  p.scheme = cfg.contains("scheme") ? scheme_from_string(get_string(cfg, "scheme", "config")) : Scheme::implicit_proximal;
  p.tau = get_number(cfg, "tau", "config");
  p.end_time = get_number(cfg, "end_time", "config");
  p.mollifier_width = get_number(cfg, "mollifier_width", 0.0, "config");
  p.inner = parse_inner(opt(cfg, "inner"));
  p.dual = parse_dual(opt(cfg, "dual"), optional_seed(cfg, ctx));
  if (cfg.contains("stamps")) p.stamps = get_numbers(cfg, "stamps", "config");
  if (cfg.contains("monitors")) {
    const json& m = cfg.at("monitors");
    require_keys(m, {"l2_lambdas", "l1_lambdas", "local_ells", "center_stride"}, "config.monitors");
    if (m.contains("l2_lambdas")) p.monitors.l2_lambdas = get_numbers(m, "l2_lambdas", "config.monitors");
    if (m.contains("l1_lambdas")) p.monitors.l1_lambdas = get_numbers(m, "l1_lambdas", "config.monitors");
    if (m.contains("local_ells")) p.monitors.local_ells = get_numbers(m, "local_ells", "config.monitors");
    p.monitors.center_stride = get_int(m, "center_stride", p.monitors.center_stride, "config.monitors");
  }

  std::optional<RadialFunction> radial_datum;
  if (cfg.contains("datum") == cfg.contains("measure")) throw ConfigError("config needs exactly one of datum, measure");
  if (cfg.contains("datum")) {
    const json& d = cfg.at("datum");
    require_keys(d, {"kind", "function", "path"}, "config.datum");
    const std::string kind = get_string(d, "kind", "config.datum");
    if (kind == "radial") {
      require_keys(d, {"kind", "function"}, "config.datum");
      radial_datum = parse_radial_function(d.contains("function") ? d.at("function") : json(), "config.datum.function");
      const GridFunction h0 = dual_norm_field(p.norm, p.grid(), p.dual);
      GridFunction u(h0.shape);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = (*radial_datum)(h0[i]);
      p.datum = std::move(u);
    } else if (kind == "dump") {
      require_keys(d, {"kind", "path"}, "config.datum");
      fs::path path = get_string(d, "path", "config.datum");
      if (path.is_relative()) path = fs::path(ctx.config_dir) / path;
      p.datum = read_binary(path.string());
    } else {
      throw ConfigError("config.datum.kind must be radial or dump");
    }
  } else {
    p.measure = parse_measure(cfg.at("measure"), p.norm, ctx.config_dir, "config.measure");
  }

  const json checks = cfg.contains("checks") ? cfg.at("checks") : json::object();
  require_keys(checks, {"energy_increase", "positivity", "l2_excess"}, "config.checks");
  const double lim_energy = get_number(checks, "energy_increase", 1e-9, "config.checks");
  const double lim_positivity = get_number(checks, "positivity", 1e-8, "config.checks");
  const double lim_l2 = get_number(checks, "l2_excess", 1e-6, "config.checks");

  std::optional<Reference> ref;
  if (cfg.contains("compare")) {
    const json& c = cfg.at("compare");
    const std::string w = "config.compare";
    require_keys(c, {"reference", "r_max", "relative", "tolerance", "profile_r_max", "profile_samples", "quadrature",
                     "options"},
                 w);
    Reference r;
    r.kind = get_string(c, "reference", w);
    if (r.kind != "gaussian" && r.kind != "representation") {
      throw ConfigError(w + ".reference must be gaussian or representation");
    }
    if (!radial_datum) throw ConfigError(w + " needs a radial datum");
    if (r.kind == "gaussian" && radial_datum->form != RadialFunction::Form::gaussian) {
      throw ConfigError(w + ": the gaussian reference needs a gaussian datum");
    }
    r.r_max = get_number(c, "r_max", r.r_max, w);
    r.relative = get_bool(c, "relative", r.relative, w);
    r.tolerance = get_number(c, "tolerance", kInf, w);
    r.profile_r_max = get_number(c, "profile_r_max", r.profile_r_max, w);
    r.profile_samples = get_int(c, "profile_samples", r.profile_samples, w);
    r.quadrature = parse_quadrature(opt(c, "quadrature"), p.norm.dimension(), w + ".quadrature");
    r.options = parse_radial_options(opt(c, "options"), w + ".options");
    ref = r;
  }
  const bool write_slices = get_bool(cfg, "write_slices", true, "config");

  p.validate();
  const Trajectory tr = solve(p);

  {
    CsvWriter csv(ctx, "simulate", "monitors.csv");
    std::vector<std::string> cols{"step", "t", "energy", "mass", "min_value", "inner_iterations", "support_clear"};
    for (const auto& m : tr.monitors) cols.push_back(m.name + "[" + fmt(m.parameter) + "]");
    csv.header(cols);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      csv.cell(static_cast<long long>(k)).cell(tr.times[k]).cell(tr.energy[k]).cell(tr.mass[k]).cell(tr.min_value[k]);
      csv.cell(static_cast<long long>(tr.inner_iterations[k])).cell(static_cast<long long>(tr.support_clear[k]));
      for (const auto& m : tr.monitors) csv.cell(m.values[k]);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(ctx, "simulate", "slices.csv");
    csv.header({"index", "t", "file"});
    for (std::size_t s = 0; s < tr.slices.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "slice_%03zu.bin", s);
      if (write_slices) write_binary(tr.slices[s], (fs::path(ctx.out_dir) / name).string());
      csv.cell(static_cast<long long>(s)).cell(tr.stamps[s]).cell(std::string_view(write_slices ? name : "")).end_row();
    }
  }
  if (!tr.completed) {
    say(ctx, "simulate: " + tr.diagnostic);
    return kNonConvergence;
  }

  bool ok = true;
  CsvWriter checks_csv(ctx, "simulate", "checks.csv");
  checks_csv.header({"check", "value", "limit", "pass"});
  auto check = [&](const std::string& name, double value, double limit, bool pass) {
    ok = ok && pass;
    checks_csv.cell(name).cell(value).cell(limit).cell(pass).end_row();
    say(ctx, name + " = " + fmt(value) + " (limit " + fmt(limit) + "): " + pass_word(pass));
  };
  const InvariantReport inv = check_invariants(tr);
  if (p.scheme == Scheme::implicit_proximal) {
    check("energy_increase", inv.max_energy_increase, lim_energy, inv.max_energy_increase <= lim_energy);
    if (inv.nonnegative_datum) check("min_value", inv.min_value, -lim_positivity, inv.min_value >= -lim_positivity);
  }
  for (std::size_t i = 0; i < inv.l2_lambdas.size(); ++i) {
    check("weighted_l2_excess[" + fmt(inv.l2_lambdas[i]) + "]", inv.l2_excess[i], lim_l2, inv.l2_excess[i] <= lim_l2);
  }

  if (ref) {
    CsvWriter csv(ctx, "simulate", "compare.csv");
    csv.header({"t", "max_error", "nodes"});
    const int dim = p.norm.dimension();
    const GridFunction h0 = dual_norm_field(p.norm, tr.shape, p.dual);
    std::optional<RadialProfile> phi;
    if (ref->kind == "representation") phi = profile_of(*radial_datum, ref->profile_r_max, ref->profile_samples);
    double worst = 0.0;
    for (std::size_t s = 0; s < tr.slices.size(); ++s) {
      const double t = tr.stamps[s];
      if (t <= 0.0) continue;
      double err = 0.0;
      long long nodes = 0;
      for (std::size_t i = 0; i < h0.size(); ++i) {
        if (!tr.mask[i] || h0[i] > ref->r_max) continue;
        const double exact = ref->kind == "gaussian"
                                 ? gaussian_heat(*radial_datum, dim, h0[i], t)
                                 : radial_heat_solution_at(*phi, dim, h0[i], t, ref->quadrature, ref->options);
        double e = std::abs(tr.slices[s][i] - exact);
        if (ref->relative) e /= std::abs(exact);
        err = std::max(err, e);
        ++nodes;
      }
      worst = std::max(worst, err);
      csv.cell(t).cell(err).cell(nodes).end_row();
    }
    check(std::string(ref->relative ? "max_relative_error" : "max_error") + "[" + ref->kind + "]", worst,
          ref->tolerance, worst <= ref->tolerance);
  }
  say(ctx, std::string("simulate: ") + (ok ? "pass" : "fail"));
  return ok ? kPass : kCheckFailed;
}

int cmd_radial_solve(const json& cfg, const RunContext& ctx) {
  if (cfg.is_null()) throw ConfigError("radial-solve needs --config");
  require_keys(cfg,
               {"norm", "dimension", "profile", "times", "points", "radii", "quadrature", "options", "cross_check",
                "tolerance", "dual", "seed"},
               "config");
  std::optional<NormSpec> norm;
  if (cfg.contains("norm")) norm = parse_norm(cfg.at("norm"), "config.norm");
  const int dim = norm ? norm->dimension() : get_int(cfg, "dimension", 0, "config");
  if (dim < 1) throw ConfigError("config needs norm or a positive dimension");
  if (norm && cfg.contains("dimension") && get_int(cfg, "dimension", dim, "config") != dim) {
    throw ConfigError("config.dimension disagrees with config.norm");
  }
  const DualEvalConfig dual = parse_dual(opt(cfg, "dual"), optional_seed(cfg, ctx));

  if (!cfg.contains("profile")) throw ConfigError("config.profile is required");
  const json& pj = cfg.at("profile");
  require_keys(pj, {"function", "r_max", "samples"}, "config.profile");
  if (!pj.contains("function")) throw ConfigError("config.profile.function is required");
  const RadialFunction f = parse_radial_function(pj.at("function"), "config.profile.function");
  const RadialProfile phi =
      profile_of(f, get_number(pj, "r_max", 30.0, "config.profile"), get_int(pj, "samples", 6001, "config.profile"));
  const SphereIntegralConfig quad = parse_quadrature(opt(cfg, "quadrature"), dim);
  const RadialSolveOptions options = parse_radial_options(opt(cfg, "options"));
  const double tolerance = get_number(cfg, "tolerance", kInf, "config");
  const bool has_closed = f.form == RadialFunction::Form::gaussian || f.form == RadialFunction::Form::constant;
  auto closed = [&](double r, double t) {
    return f.form == RadialFunction::Form::constant ? f.amplitude : gaussian_heat(f, dim, r, t);
  };

  bool ok = true;
  if (cfg.contains("points") || cfg.contains("radii")) {
    const std::vector<double> times = get_numbers(cfg, "times", "config");
    std::vector<Vec> points;
    std::vector<double> radii;
    if (cfg.contains("points")) {
      if (!norm) throw ConfigError("config.points need config.norm");
      if (!cfg.at("points").is_array()) throw ConfigError("config.points must be an array of points");
      for (const json& e : cfg.at("points")) {
        points.push_back(to_vec(e, "config.points"));
        check_dimension(*norm, points.back());
        radii.push_back(dual_norm_eval(*norm, points.back(), dual));
      }
    } else {
      radii = get_numbers(cfg, "radii", "config");
    }
    CsvWriter csv(ctx, "radial-solve", "radial_solve.csv");
    std::vector<std::string> cols = points.empty() ? std::vector<std::string>{} : coordinate_names(dim);
    for (const char* c : {"r", "t", "u"}) cols.emplace_back(c);
    if (has_closed) {
      cols.emplace_back("closed_form");
      cols.emplace_back("abs_error");
    }
    csv.header(cols);
    double worst = 0.0;
    for (double t : times) {
      for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!points.empty()) {
          for (int a = 0; a < dim; ++a) csv.cell(points[i][a]);
        }
        const double u = radial_heat_solution_at(phi, dim, radii[i], t, quad, options);
        csv.cell(radii[i]).cell(t).cell(u);
        if (has_closed) {
          const double e = std::abs(u - closed(radii[i], t));
          worst = std::max(worst, e);
          csv.cell(closed(radii[i], t)).cell(e);
        }
        csv.end_row();
      }
    }
    if (has_closed) {
      const bool pass = worst <= tolerance;
      ok = ok && pass;
      say(ctx, "closed-form max error " + fmt(worst) + ": " + pass_word(pass));
    }
  }

  if (cfg.contains("cross_check")) {
    const json& cc = cfg.at("cross_check");
    const std::string w = "config.cross_check";
    require_keys(cc, {"dump", "time", "r_max", "tolerance"}, w);
    if (!norm) throw ConfigError(w + " needs config.norm");
    fs::path path = get_string(cc, "dump", w);
    if (path.is_relative()) path = fs::path(ctx.config_dir) / path;
    const GridFunction u = read_binary(path.string());
    if (u.shape.dim != dim) throw ConfigError(w + ": dump dimension differs from the norm");
    const double t = get_number(cc, "time", w);
    const double r_max = get_number(cc, "r_max", 2.0, w);
    const double tol = get_number(cc, "tolerance", kInf, w);
    const GridFunction h0 = dual_norm_field(*norm, u.shape, dual);
    CsvWriter csv(ctx, "radial-solve", "cross_check.csv");
    std::vector<std::string> cols = coordinate_names(dim);
    for (const char* c : {"r", "u_dump", "u_formula", "relative_error"}) cols.emplace_back(c);
    csv.header(cols);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u.shape.on_boundary(i) || h0[i] > r_max) continue;
      const double v = radial_heat_solution_at(phi, dim, h0[i], t, quad, options);
      const double e = std::abs(u[i] - v) / std::abs(v);
      worst = std::max(worst, e);
      const Vec x = u.shape.point(i);
      for (int a = 0; a < dim; ++a) csv.cell(x[a]);
      csv.cell(h0[i]).cell(u[i]).cell(v).cell(e).end_row();
    }
    const bool pass = worst <= tol;
    ok = ok && pass;
    say(ctx, "cross-check max relative error " + fmt(worst) + ": " + pass_word(pass));
  }
  if (!cfg.contains("points") && !cfg.contains("radii") && !cfg.contains("cross_check")) {
    throw ConfigError("config needs points, radii or cross_check");
  }
  return ok ? kPass : kCheckFailed;
}

int cmd_classify(const json& cfg, const RunContext& ctx) {
  if (cfg.is_null()) throw ConfigError("classify needs --config");
  require_keys(cfg, {"norm", "measure", "lambda_grid", "windows", "threshold", "sampling", "dual", "expect", "seed"},
               "config");
  const NormSpec norm = parse_norm(cfg.contains("norm") ? cfg.at("norm") : json(), "config.norm");
  if (!cfg.contains("measure")) throw ConfigError("config.measure is required");
  const MeasureSpec mu = parse_measure(cfg.at("measure"), norm, ctx.config_dir, "config.measure");
  const std::vector<double> grid = get_numbers(cfg, "lambda_grid", "config");
  ClassifyOptions o;
  if (cfg.contains("windows")) o.windows = get_numbers(cfg, "windows", "config");
  o.threshold = get_number(cfg, "threshold", o.threshold, "config");
  o.sampling = parse_sampling(opt(cfg, "sampling"));
  const DualEvalConfig dual = parse_dual(opt(cfg, "dual"), optional_seed(cfg, ctx));

  const Classification c = classify(mu, norm, grid, o, dual);
  {
    CsvWriter csv(ctx, "classify", "classify.csv");
    csv.header({"lambda", "window", "value", "log_value", "stabilized"});
    for (const auto& r : c.table) {
      csv.cell(r.lambda).cell(r.window).cell(r.value).cell(r.log_value);
      csv.cell(std::string_view(r.stabilized ? "yes" : "no")).end_row();
    }
  }
  {
    CsvWriter csv(ctx, "classify", "classify_summary.csv");
    csv.header({"admissible", "lambda_star", "s_star"});
    csv.cell(std::string_view(c.admissible ? "yes" : "no")).cell(c.lambda_star).cell(c.s_star).end_row();
  }
  say(ctx, c.admissible ? "admissible: Lambda* = " + fmt(c.lambda_star) + ", S* = " + fmt(c.s_star)
                        : "not admissible on this Lambda grid");

  if (!cfg.contains("expect")) return kPass;
  const json& e = cfg.at("expect");
  require_keys(e, {"admissible", "lambda_star"}, "config.expect");
  bool ok = true;
  if (e.contains("admissible")) ok = ok && get_bool(e, "admissible", false, "config.expect") == c.admissible;
  if (e.contains("lambda_star")) {
    ok = ok && c.admissible && std::abs(c.lambda_star - get_number(e, "lambda_star", "config.expect")) <= 1e-12;
  }
  say(ctx, std::string("expectation: ") + pass_word(ok));
  return ok ? kPass : kCheckFailed;
}

namespace {

std::vector<std::string> data_lines(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + p.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(is, line);) {
    if (!line.empty() && line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::optional<double> as_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

int cmd_compare(const json& cfg, const RunContext& ctx) {
  if (cfg.is_null()) throw ConfigError("compare needs --config");
  require_keys(cfg, {"a", "b", "mode", "tolerance", "relative", "seed"}, "config");
  auto resolve = [&](const char* key) {
    fs::path p = get_string(cfg, key, "config");
    return p.is_relative() ? fs::path(ctx.config_dir) / p : p;
  };
  const fs::path a = resolve("a"), b = resolve("b");
  const std::string mode = cfg.contains("mode") ? get_string(cfg, "mode", "config")
                                                : (a.extension() == ".bin" ? "grid" : "csv");
  const double tol = get_number(cfg, "tolerance", 0.0, "config");
  const bool relative = get_bool(cfg, "relative", false, "config");

  double max_abs = 0.0, max_rel = 0.0;
  long long count = 0;
  bool structure_ok = true;
  auto account = [&](double x, double y) {
    const double d = std::abs(x - y);
    if (std::isnan(x) != std::isnan(y)) structure_ok = false;
    if (std::isnan(d)) return;
    max_abs = std::max(max_abs, d);
    const double scale = std::max(std::abs(x), std::abs(y));
    if (scale > 0.0) max_rel = std::max(max_rel, d / scale);
    ++count;
  };
  if (mode == "grid") {
    const GridFunction ga = read_binary(a.string()), gb = read_binary(b.string());
    if (!(ga.shape == gb.shape)) throw ConfigError("grid dumps have different shapes");
    for (std::size_t i = 0; i < ga.size(); ++i) account(ga[i], gb[i]);
  } else if (mode == "csv") {
    const auto la = data_lines(a), lb = data_lines(b);
    structure_ok = la.size() == lb.size();
    for (std::size_t r = 0; structure_ok && r < la.size(); ++r) {
      const auto fa = split_csv(la[r]), fb = split_csv(lb[r]);
      if (fa.size() != fb.size()) {
        structure_ok = false;
        break;
      }
      for (std::size_t k = 0; k < fa.size(); ++k) {
        const auto x = as_double(fa[k]), y = as_double(fb[k]);
        if (x && y) {
          account(*x, *y);
        } else if (fa[k] != fb[k]) {
          structure_ok = false;
        }
      }
    }
  } else if (mode == "bytes") {
    std::ifstream ia(a, std::ios::binary), ib(b, std::ios::binary);
    if (!ia || !ib) throw ConfigError("cannot read the files to compare");
    const std::string sa((std::istreambuf_iterator<char>(ia)), {}), sb((std::istreambuf_iterator<char>(ib)), {});
    structure_ok = sa == sb;
    count = static_cast<long long>(sa.size());
  } else {
    throw ConfigError("config.mode must be grid, csv or bytes");
  }
  const bool ok = structure_ok && (relative ? max_rel : max_abs) <= tol;
  CsvWriter csv(ctx, "compare", "compare.csv");
  csv.header({"a", "b", "mode", "max_abs", "max_rel", "values", "pass"});
  csv.cell(a.filename().string()).cell(b.filename().string()).cell(mode).cell(max_abs).cell(max_rel).cell(count);
  csv.cell(ok).end_row();
  say(ctx, "compare " + mode + ": max_abs " + fmt(max_abs) + ", max_rel " + fmt(max_rel) + ": " + pass_word(ok));
  return ok ? kPass : kCheckFailed;
}

json default_config(std::string_view command) {
  if (command == "verify-norms") return json{{"norms", default_norms()}};
  if (command == "verify-exact") return json{{"cases", default_exact_cases()}};
  return json();
}

int run_command(std::string_view command, const json& cfg, const RunContext& ctx) {
  try {
    if (command == "verify-norms") return cmd_verify_norms(cfg, ctx);
    if (command == "verify-exact") return cmd_verify_exact(cfg, ctx);
    if (command == "simulate") return cmd_simulate(cfg, ctx);
    if (command == "radial-solve") return cmd_radial_solve(cfg, ctx);
    if (command == "classify") return cmd_classify(cfg, ctx);
    if (command == "compare") return cmd_compare(cfg, ctx);
    throw ConfigError("unknown command " + std::string(command));
  } catch (const ConvergenceError& e) {
    say(ctx, std::string("non-convergence: ") + e.what() + " (residual " + fmt(e.residual()) + ")");
    return kNonConvergence;
  } catch (const Error& e) {
    say(ctx, std::string("configuration error: ") + e.what());
    return kConfigError;
  } catch (const json::exception& e) {
    say(ctx, std::string("configuration error: ") + e.what());
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    say(ctx, std::string("configuration error: ") + e.what());
    return kConfigError;
  }
}

json load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace finsler::cli
