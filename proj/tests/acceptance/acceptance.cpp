// Acceptance run: one PASS/FAIL line per criterion, detail lines indented beneath it.
// Exit status is the number of failing criteria (0 when all pass).

#include "commands.hpp"

#include "finsler/dual.hpp"
#include "finsler/exact_solutions.hpp"
#include "finsler/finsler_operator.hpp"
#include "finsler/flow_solver.hpp"
#include "finsler/initial_data.hpp"
#include "finsler/radial_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace finsler;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr std::uint64_t kSeed = 20240611;
constexpr int kNormSamples = 1000;
constexpr double kTolInequality = 1e-10;
constexpr double kTolUnitClosed = 1e-8;
constexpr double kTolUnitNumeric = 1e-5;
constexpr double kTolInversion = 1e-6;
constexpr double kReductionOrderLo = 1.6, kReductionOrderHi = 2.4;
constexpr double kLinearityFactor = 10.0;
constexpr double kLinearityOrder = 1.5;
constexpr double kLinearRoundoff = 1e-10;
constexpr double kControlDefect = 0.1;
constexpr double kResidualOrderLo = 1.8, kResidualOrderHi = 2.2;
constexpr double kBarenblattOrder = 1.0;
constexpr double kBesselRel = 1e-8;
constexpr double kSinhAbs = 1e-10;
constexpr double kRepresentationRel = 2e-2;
constexpr double kL2Excess = 1e-6;
constexpr double kEnergyIncrease = 1e-9;
constexpr double kHomogeneity = 1e-8;
constexpr double kScalingDefect = 3e-2;
constexpr double kNestedFinal = 1e-4;

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

class Board {
 public:
  void detail(const std::string& s) { std::cout << "    " << s << '\n'; }
  void criterion(int id, const std::string& name, bool ok, const std::string& summary) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char t[32];
    std::snprintf(t, sizeof t, "%.1fs", secs);
    std::cout << (ok ? "PASS" : "FAIL") << " c" << id << ' ' << name << ": " << summary << " [" << t << "]"
              << std::endl;
    failures_ += ok ? 0 : 1;
    start_ = std::chrono::steady_clock::now();
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

NormSpec ellipse41() { return NormSpec::ellipse(mat2(4, 0, 0, 1)); }

RadialProfile gaussian_profile(double r_max = 8.0, int samples = 4001) {
  return RadialProfile::sample([](double r) { return std::exp(-r * r); }, r_max, samples);
}

// ------------------------------------------------------------------ c1

void norm_identities(Board& b) {
  Vec e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  const std::vector<NormSpec> norms{NormSpec::euclidean(2),      NormSpec::p_norm(2, 1.5),
                                    NormSpec::p_norm(2, 2.0),    NormSpec::p_norm(2, 3.0),
                                    NormSpec::p_norm(2, 4.0),    ellipse41(),
                                    NormSpec::ellipse(mat2(3.0, 1.2, 1.2, 1.5)),
                                    NormSpec::smoothed_polytope({e1, e2}, 0.05)};
  bool ok = true;
  double worst_ineq = 0.0, worst_inv = 0.0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const auto r = verify_identities(norms[i], kNormSamples, DualEvalConfig{}, kSeed + i);
    const double tol_unit = r.numeric_dual ? kTolUnitNumeric : kTolUnitClosed;
    const double unit = std::max(r.primal_unit, r.dual_unit);
    const double inv = std::max(r.primal_inversion, r.dual_inversion);
    const bool pass = r.samples == kNormSamples && r.duality_inequality <= kTolInequality && unit <= tol_unit &&
                      inv <= kTolInversion;
    ok = ok && pass;
    worst_ineq = std::max(worst_ineq, r.duality_inequality);
    worst_inv = std::max(worst_inv, inv);
    b.detail(norms[i].describe() + (r.numeric_dual ? " (numeric H0)" : "") + ": inequality " +
             num(r.duality_inequality) + ", unit " + num(unit) + " (<= " + num(tol_unit) + "), inversion " +
             num(inv) + (pass ? "" : "  <-- fail"));
  }
  b.criterion(1, "norm identities", ok,
              std::to_string(norms.size()) + " norms x " + std::to_string(kNormSamples) + " samples, worst inequality " +
                  num(worst_ineq) + ", worst inversion " + num(worst_inv));
}

// ------------------------------------------------------------------ c2, c3

// reduction errors at h = 1/32, 1/64 per norm; reused by the linearity bound
std::vector<std::vector<RefinementLevel>> g_reduction;

const std::vector<NormSpec>& reduction_norms() {
  static const std::vector<NormSpec> n{ellipse41(), NormSpec::p_norm(2, 3.0)};
  return n;
}

GridShape box3() { return GridShape::cube(2, -3.0, 3.0, 192); }  // h = 1/32

void radial_reduction(Board& b) {
  const auto rp = gaussian_profile();
  bool ok = true;
  std::string summary;
  for (const auto& n : reduction_norms()) {
    const auto rep = check_radial_reduction(rp, n, box3(), 1);
    g_reduction.push_back(rep.levels);
    const bool decreasing = rep.levels[1].max_error < rep.levels[0].max_error;
    const bool pass = decreasing && rep.order >= kReductionOrderLo && rep.order <= kReductionOrderHi;
    ok = ok && pass;
    b.detail(n.describe() + ": max error " + num(rep.levels[0].max_error) + " -> " + num(rep.levels[1].max_error) +
             ", order " + num(rep.order) + ", mean error " + num(rep.levels[0].mean_error) + " -> " +
             num(rep.levels[1].mean_error) + (pass ? "" : "  <-- fail"));
    summary += n.describe() + " order " + num(rep.order) + "; ";
  }
  b.criterion(2, "radial reduction", ok, summary + "band [1.6, 2.4]");
}

void linearity(Board& b) {
  const auto rp1 = gaussian_profile();
  const auto rp2 = RadialProfile::sample([](double r) { return 1.0 / (1.0 + r * r); }, 8.0, 4001);
  bool ok = true;
  std::string summary;
  for (std::size_t i = 0; i < reduction_norms().size(); ++i) {
    const auto& n = reduction_norms()[i];
    const auto rep = check_linearity(rp1, rp2, 2.0, -3.0, n, box3(), 1);
    bool bounded = true, roundoff = true;
    for (std::size_t l = 0; l < rep.radial.size(); ++l) {
      bounded = bounded && rep.radial[l].max_error <= kLinearityFactor * g_reduction[i][l].max_error;
      roundoff = roundoff && rep.radial[l].max_error <= kLinearRoundoff;
    }
    // A linear operator leaves only roundoff, whose ratio is not an order.
    const bool order_ok = roundoff || rep.radial_order >= kLinearityOrder;
    const bool radial_ok = bounded && order_ok;
    bool control_ok = true;
    for (const auto& lv : rep.control) control_ok = control_ok && lv.max_error >= kControlDefect;
    ok = ok && radial_ok && control_ok;
    b.detail(n.describe() + " radial pair: defect " + num(rep.radial[0].max_error) + " -> " +
             num(rep.radial[1].max_error) + " vs 10x reduction " + num(kLinearityFactor * g_reduction[i][0].max_error) +
             " -> " + num(kLinearityFactor * g_reduction[i][1].max_error) + ", order " +
             (roundoff ? std::string("n/a (roundoff)") : num(rep.radial_order)) + (radial_ok ? "" : "  <-- fail"));
    b.detail(n.describe() + " control x1^2, x2^2: defect " + num(rep.control[0].max_error) + " -> " +
             num(rep.control[1].max_error) + " (>= 0.1)" + (control_ok ? "" : "  <-- fail"));
    summary += n.describe() + std::string(radial_ok ? " radial ok" : " radial FAIL") +
               (control_ok ? ", control ok; " : ", control FAIL; ");
  }
  const auto p4 = check_linearity(rp1, rp2, 2.0, -3.0, NormSpec::p_norm(2, 4.0), box3(), 0);
  b.detail("p_norm(4) control (reference only): defect " + num(p4.control[0].max_error));
  b.criterion(3, "linearity on radial lifts", ok, summary);
}

// ------------------------------------------------------------------ c4

void exact_residuals(Board& b) {
  bool ok = true;
  std::string summary;
  auto run = [&](const std::string& name, const SolutionSpec& s, const GridShape& g, double t, double dt,
                 const ResidualWindow& w, double lo, double hi) {
    const auto rep = residual_study(s, g, t, dt, 1, w);
    const bool pass = rep.order >= lo && rep.order <= hi;
    ok = ok && pass;
    b.detail(name + ": residual " + num(rep.levels[0].max_residual) + " -> " + num(rep.levels[1].max_residual) +
             ", order " + num(rep.order) + (pass ? "" : "  <-- fail"));
    summary += name + " " + num(rep.order) + "; ";
  };
  const auto euclid = NormSpec::euclidean(2);
  const ResidualWindow all;
  run("gauss_kernel euclidean t=0.5", SolutionSpec::gauss_kernel(euclid), GridShape::cube(2, -3, 3, 48), 0.5, 0.02,
      all, kResidualOrderLo, kResidualOrderHi);
  run("gauss_kernel ellipse t=0.5", SolutionSpec::gauss_kernel(ellipse41()), GridShape::cube(2, -3, 3, 48), 0.5, 0.02,
      all, kResidualOrderLo, kResidualOrderHi);
  ResidualWindow core;
  core.r_max = 1.0;
  for (double t : {0.25, 0.5, 0.75}) {
    run("blowup L=1/4 t=" + num(t), SolutionSpec::blowup(euclid, 0.25), GridShape::cube(2, -1.5, 1.5, 48), t, 0.02,
        core, kResidualOrderLo, kResidualOrderHi);
  }
  ResidualWindow annulus;
  annulus.r_min = 0.25;
  annulus.r_max = 1.5;
  run("talenti p=3", SolutionSpec::talenti(euclid, 3.0, 1.0, 1.0), GridShape::cube(2, -2, 2, 64), 0.0, 0.02, annulus,
      kResidualOrderLo, kResidualOrderHi);
  run("barenblatt N=1 m=2 t=1", SolutionSpec::barenblatt(NormSpec::euclidean(1), 2.0, 1.0),
      GridShape::cube(1, -6, 6, 200), 1.0, 0.02, all, kBarenblattOrder, INFINITY);
  b.criterion(4, "exact-solution residual orders", ok, summary);
}

// ------------------------------------------------------------------ c5

void sphere_integral(Board& b) {
  const auto c2 = SphereIntegralConfig::defaults(2);
  const auto c3 = SphereIntegralConfig::defaults(3);
  double worst2 = 0.0, worst3 = 0.0;
  for (double z : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double i2 = sphere_integral_I(z, c2);
    const double ref2 = 2.0 * std::numbers::pi * std::cyl_bessel_i(0.0, z);
    worst2 = std::max(worst2, std::abs(i2 - ref2) / i2);
    const double i3 = sphere_integral_I(z, c3);
    const double ref3 = z == 0.0 ? 4.0 * std::numbers::pi : 4.0 * std::numbers::pi * std::sinh(z) / z;
    worst3 = std::max(worst3, std::abs(i3 - ref3));
    b.detail("z=" + num(z) + ": N=2 rel " + num(std::abs(i2 - ref2) / i2) + ", N=3 abs " + num(std::abs(i3 - ref3)));
  }
  const bool ok = worst2 <= kBesselRel && worst3 <= kSinhAbs;
  b.criterion(5, "sphere integral", ok, "N=2 max rel " + num(worst2) + " (<= 1e-8), N=3 max abs " + num(worst3) +
                                            " (<= 1e-10)");
}

// ------------------------------------------------------------------ c6, c7

double g_energy_increase = 0.0;  // criterion 8, over every trajectory in this run
std::string g_energy_detail;

void note_energy(const std::string& where, double v) {
  g_energy_increase = std::max(g_energy_increase, v);
  g_energy_detail += where + " " + num(v) + "; ";
}

void representation_vs_solver(Board& b) {
  FlowProblem p;
  p.norm = ellipse41();
  p.radius = 6.0;
  p.spacing = 6.0 / 128;
  p.tau = 1e-3;
  p.end_time = 0.25;
  p.stamps = {0.0, 0.25};
  p.monitors.l2_lambdas = {0.5};
  const GridFunction h0 = dual_norm_field(p.norm, p.grid());
  GridFunction u0(h0.shape);
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = std::exp(-h0[i] * h0[i]);
  p.datum = u0;
  const Trajectory tr = solve(p);
  const InvariantReport inv = check_invariants(tr);
  note_energy("c6 trajectory", inv.max_energy_increase);

  const auto phi = gaussian_profile(30.0, 6001);
  const auto quad = SphereIntegralConfig::defaults(2);
  double worst = 0.0;
  std::size_t nodes = 0;
  for (std::size_t i = 0; i < h0.size(); ++i) {
    if (!tr.mask[i] || h0[i] > 2.0) continue;
    const double ref = radial_heat_solution_at(phi, 2, h0[i], 0.25, quad);
    worst = std::max(worst, std::abs(tr.slices.back()[i] - ref) / std::abs(ref));
    ++nodes;
  }
  const bool ok6 = tr.completed && worst <= kRepresentationRel;
  b.detail("steps " + std::to_string(tr.times.size() - 1) + ", nodes with H0 <= 2: " + std::to_string(nodes) +
           (tr.completed ? "" : ", flow incomplete: " + tr.diagnostic));
  b.criterion(6, "representation formula vs implicit flow", ok6,
              "max relative error " + num(worst) + " (<= 2e-2) at T=0.25");

  const double excess = inv.l2_excess.empty() ? INFINITY : inv.l2_excess[0];
  const bool ok7 = tr.completed && excess <= kL2Excess;
  b.detail("weighted L2 at t=0: " + num(tr.monitors[0].values.front()) + ", at T: " +
           num(tr.monitors[0].values.back()));
  b.criterion(7, "weighted L2 monitor (lambda = 0.5)", ok7, "max excess over t=0 value " + num(excess) + " (<= 1e-6)");
}

// ------------------------------------------------------------------ c9

void scaling(Board& b) {
  FlowProblem p;
  p.norm = NormSpec::euclidean(2);
  p.radius = 2.0;
  p.spacing = 1.0 / 64;
  p.tau = 2e-3;
  p.end_time = 0.1;
  p.datum = GridFunction::sample(p.grid(), [](const Vec& x) { return std::exp(-x.squaredNorm()); });
  const auto rep = scaling_check(p, 2);
  note_energy("c9 scaling", rep.max_energy_increase);

  // homogeneity of a single prox step for a nonlinear norm
  const auto n3 = NormSpec::p_norm(2, 3.0);
  const auto s = domain_grid(n3, 1.5, 1.0 / 24);
  const auto mask = domain_mask(n3, s, 1.5);
  GridFunction up = GridFunction::sample(s, [](const Vec& x) { return std::exp(-2.0 * x.squaredNorm()); });
  apply_mask(up, mask);
  GridFunction twice = up;
  for (double& v : twice.values) v *= 2.0;
  const auto a = proximal_step(up, n3, mask, 0.01);
  const auto c = proximal_step(twice, n3, mask, 0.01);
  double prox_defect = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i) prox_defect = std::max(prox_defect, std::abs(2.0 * a.u[i] - c.u[i]));

  const double homog = std::max(prox_defect, rep.amplitude_defect);
  const bool ok = homog <= kHomogeneity && rep.defect <= kScalingDefect;
  b.detail("prox step p_norm(3): |2 prox(u) - prox(2u)| = " + num(prox_defect));
  b.detail("euclidean trajectory: |u[2phi] - 2u[phi]| = " + num(rep.amplitude_defect) + ", samples " +
           std::to_string(rep.samples));
  b.criterion(9, "scaling symmetry", ok,
              "homogeneity " + num(homog) + " (<= 1e-8), space-time defect k=2 at h=1/64 " + num(rep.defect) +
                  " (<= 3e-2)");
}

// ------------------------------------------------------------------ c10

void growth_classifier(Board& b) {
  const auto n = NormSpec::euclidean(2);
  const std::vector<double> grid{0.1, 0.2, 0.3, 0.5};
  ClassifyOptions o;
  o.windows = {4, 6, 8, 12};
  const auto g = classify(MeasureSpec::from_radial(RadialFunction::exp_power(1.0, 0.25, 2.0), n), n, grid, o);
  const auto bump = classify(MeasureSpec::from_radial(RadialFunction::bump(1.0, 1.0), n), n, grid, o);
  const auto cubic = classify(MeasureSpec::from_radial(RadialFunction::exp_power(1.0, 1.0, 3.0), n), n, grid, o);
  const bool ok_g = g.admissible && g.lambda_star == 0.3 && std::abs(g.s_star - 1.0 / 1.2) <= 1e-12;
  const bool ok_b = bump.admissible && bump.lambda_star == 0.1;
  const bool ok_c = !cubic.admissible;
  b.detail("e^{0.25 H0^2}: Lambda* = " + num(g.lambda_star) + ", S* = " + num(g.s_star));
  b.detail("bump: Lambda* = " + num(bump.lambda_star));
  b.detail(std::string("e^{H0^3}: ") + (cubic.admissible ? "admissible  <-- fail" : "not admissible"));
  b.criterion(10, "growth classifier", ok_g && ok_b && ok_c,
              "Lambda* " + num(g.lambda_star) + ", S* " + num(g.s_star) + ", bump " + num(bump.lambda_star) +
                  ", cubic " + (cubic.admissible ? "admissible" : "rejected"));
}

// ------------------------------------------------------------------ c11

void nested_domains(Board& b) {
  const auto n = NormSpec::euclidean(2);
  const std::vector<double> radii{4, 6, 8};
  const auto rep = nested_domain_study(MeasureSpec::from_radial(RadialFunction::bump(1.0, 3.0), n), radii, n, 0.25);
  note_energy("c11 nested", rep.max_energy_increase);
  const auto small = nested_domain_study(MeasureSpec::from_radial(RadialFunction::bump(1.0, 1.0), n), radii, n, 0.25);
  note_energy("c11 nested (R=1 bump)", small.max_energy_increase);
  const bool ok = rep.decreasing && rep.differences.back() <= kNestedFinal;
  b.detail("bump radius 3: differences " + num(rep.differences[0]) + ", " + num(rep.differences[1]));
  b.detail("bump radius 1 (reference only): differences " + num(small.differences[0]) + ", " +
           num(small.differences[1]) + (small.decreasing ? "" : " (not strictly decreasing)"));
  b.criterion(11, "nested domains", ok,
              std::string(rep.decreasing ? "strictly decreasing" : "NOT decreasing") + ", final " +
                  num(rep.differences.back()) + " (<= 1e-4)");
}

// ------------------------------------------------------------------ c12

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void determinism(Board& b) {
  using cli::json;
  const fs::path root = fs::temp_directory_path() / "finsler_acceptance_determinism";
  fs::remove_all(root);
  const json classify_cfg{
      {"norm", {{"family", "euclidean"}, {"dimension", 2}}},
      {"measure", {{"kind", "radial"}, {"function", {{"form", "exp_power"}, {"coeff", 0.25}, {"exponent", 2}}}}},
      {"lambda_grid", {0.1, 0.2, 0.3, 0.5}}};
  const json simulate_cfg{{"norm", {{"family", "p_norm"}, {"dimension", 2}, {"p", 3}}},
                          {"radius", 1.5},
                          {"spacing", 0.0625},
                          {"tau", 0.005},
                          {"end_time", 0.05},
                          {"measure", {{"kind", "atoms"}, {"atoms", {{{0.3, -0.2}, 1.0}, {{-0.4, 0.1}, 0.5}}}}},
                          {"mollifier_width", 0.4},
                          {"monitors", {{"l2_lambdas", {0.5}}, {"l1_lambdas", {0.5}}, {"local_ells", {0.25}}}}};
  const json radial_cfg{{"dimension", 2},
                        {"profile", {{"function", {{"form", "gaussian"}, {"coeff", 1.0}}}}},
                        {"radii", {0.0, 0.5, 1.0, 2.0}},
                        {"times", {0.1, 0.5}}};
  const json exact_cfg{{"cases", json::array({cli::default_config("verify-exact")["cases"][0]})}};
  struct Run {
    const char* command;
    json cfg;
  };
  const std::vector<Run> runs{{"verify-norms", json::object()},
                              {"verify-exact", exact_cfg},
                              {"classify", classify_cfg},
                              {"simulate", simulate_cfg},
                              {"radial-solve", radial_cfg}};
  bool clean = true;
  for (const char* rep : {"a", "b"}) {
    for (const auto& r : runs) {
      cli::RunContext ctx;
      ctx.out_dir = (root / rep / r.command).string();
      ctx.seed = kSeed;
      ctx.timestamp = false;
      const int code = cli::run_command(r.command, r.cfg, ctx);
      if (code != cli::kPass) {
        clean = false;
        b.detail(std::string(r.command) + " exit " + std::to_string(code));
      }
    }
  }
  bool ok = clean;
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    const bool same = fs::exists(root / "b" / rel) && slurp(e.path()) == slurp(root / "b" / rel);
    ok = ok && same;
    ++files;
    if (!same) b.detail(rel.string() + " differs");
  }
  ok = ok && files > 0;
  fs::remove_all(root);
  b.criterion(12, "determinism", ok, std::to_string(files) + " output files byte-identical across two runs");
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);
  Board b;
  norm_identities(b);
  radial_reduction(b);
  linearity(b);
  exact_residuals(b);
  sphere_integral(b);
  representation_vs_solver(b);
  scaling(b);
  growth_classifier(b);
  nested_domains(b);
  b.detail(g_energy_detail);
  b.criterion(8, "energy dissipation", g_energy_increase <= kEnergyIncrease,
              "max step increase " + num(g_energy_increase) + " over all trajectories (<= 1e-9)");
  determinism(b);
  std::cout << b.failures() << " criteria failing" << std::endl;
  return b.failures();
}
