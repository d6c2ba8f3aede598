#include "commands.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace finsler;
using namespace finsler::cli;
namespace fs = std::filesystem;

namespace {

class Harness : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("finsler_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunContext ctx(const std::string& sub, bool timestamp = false) const {
    RunContext c;
    c.out_dir = (root_ / sub).string();
    c.config_dir = root_.string();
    c.timestamp = timestamp;
    c.seed = 11;
    return c;
  }

  std::string slurp(const std::string& sub, const std::string& file) const {
    std::ifstream is(root_ / sub / file, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  fs::path root_;
};

json small_flow() {
  return json{{"norm", {{"family", "euclidean"}, {"dimension", 2}}},
              {"radius", 2},
              {"spacing", 0.125},
              {"tau", 0.01},
              {"end_time", 0.05},
              {"datum", {{"kind", "radial"}, {"function", {{"form", "gaussian"}, {"amplitude", 1}, {"coeff", 1}}}}}};
}

}  // namespace

TEST(Config, NormRoundTrip) {
  Eigen::MatrixXd m(2, 2);
  m << 3.0, 1.2, 1.2, 1.5;
  Vec d1(2), d2(2);
  d1 << 1, 0;
  d2 << 0, 1;
  for (const auto& n : {NormSpec::euclidean(3), NormSpec::p_norm(2, 1.5), NormSpec::ellipse(m),
                        NormSpec::smoothed_polytope({d1, d2}, 0.05)}) {
    EXPECT_TRUE(parse_norm(norm_to_json(n)) == n) << n.describe();
  }
}

TEST(Config, RejectsUnknownAndMistypedKeys) {
  EXPECT_THROW(parse_norm(json{{"family", "euclidean"}, {"dimension", 2}, {"p", 3}}), ConfigError);
  EXPECT_THROW(parse_norm(json{{"family", "p_norm"}, {"dimension", 2}, {"p", "three"}}), ConfigError);
  EXPECT_THROW(parse_norm(json{{"family", "p_norm"}, {"dimension", 2}, {"p", 1.0}}), InvalidSpec);
  EXPECT_THROW(parse_grid(json{{"lo", {0}}, {"hi", {1}}, {"cells", {2.5}}}), ConfigError);
  EXPECT_THROW(parse_radial_function(json{{"form", "bump"}, {"amplitude", 1}, {"coeff", 2}}), ConfigError);
  EXPECT_THROW(parse_inner(json{{"tolerance", 1e-8}, {"iters", 3}}), ConfigError);
}

TEST(Config, MeasureForms) {
  const auto n = NormSpec::euclidean(2);
  const auto atoms = parse_measure(json{{"kind", "atoms"}, {"atoms", {{{0.5, 0.0}, 2.0}}}}, n, ".");
  ASSERT_EQ(atoms.atoms.size(), 1u);
  EXPECT_EQ(atoms.atoms[0].weight, 2.0);
  EXPECT_EQ(parse_measure(json{{"kind", "zero"}}, n, ".").dimension(), 2);
  const auto radial =
      parse_measure(json{{"kind", "radial"}, {"function", {{"form", "bump"}, {"radius", 1.5}}}}, n, ".");
  EXPECT_EQ(radial.radial->radius, 1.5);
  EXPECT_THROW(parse_measure(json{{"kind", "atoms"}, {"atoms", {{0.5, 0.0, 2.0}}}}, n, "."), ConfigError);
}

TEST(Csv, Quoting) {
  EXPECT_EQ(csv_quote("plain"), "plain");
  EXPECT_EQ(csv_quote("ellipse(diag(4,1))"), "\"ellipse(diag(4,1))\"");
  EXPECT_EQ(csv_quote("a\"b"), "\"a\"\"b\"");
}

TEST_F(Harness, VerifyNormsDefaultSuitePasses) {
  EXPECT_EQ(run_command("verify-norms", json(), ctx("a")), kPass);
  const std::string csv = slurp("a", "verify_norms.csv");
  EXPECT_EQ(csv.rfind("norm,numeric_dual", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}

TEST_F(Harness, VerifyNormsExitCodes) {
  RunContext no_seed = ctx("a");
  no_seed.seed.reset();
  EXPECT_EQ(run_command("verify-norms", json(), no_seed), kConfigError);
  EXPECT_EQ(run_command("verify-norms", json{{"norms", {{{"family", "p_norm"}, {"dimension", 2}, {"p", 1}}}}}, ctx("b")),
            kConfigError);
  const json tight{{"norms", {{{"family", "p_norm"}, {"dimension", 2}, {"p", 3}}}},
                   {"tolerances", {{"inequality", 1e-16}, {"unit_closed", 1e-16}, {"inversion", 1e-16}}}};
  EXPECT_EQ(run_command("verify-norms", tight, ctx("c")), kCheckFailed);
  EXPECT_EQ(run_command("verify-norms", json{{"sample", 10}}, ctx("d")), kConfigError);
}

TEST_F(Harness, DeterministicOutputs) {
  for (const char* dir : {"r1", "r2"}) {
    ASSERT_EQ(run_command("verify-norms", json{{"samples", 200}}, ctx(dir)), kPass);
    ASSERT_EQ(run_command("simulate", small_flow(), ctx(dir)), kPass);
  }
  EXPECT_EQ(slurp("r1", "verify_norms.csv"), slurp("r2", "verify_norms.csv"));
  EXPECT_EQ(slurp("r1", "monitors.csv"), slurp("r2", "monitors.csv"));
  EXPECT_EQ(slurp("r1", "slice_001.bin"), slurp("r2", "slice_001.bin"));

  RunContext other = ctx("r3");
  other.seed = 12;
  ASSERT_EQ(run_command("verify-norms", json{{"samples", 200}}, other), kPass);
  EXPECT_NE(slurp("r1", "verify_norms.csv"), slurp("r3", "verify_norms.csv"));
}

TEST_F(Harness, TimestampLineIsOptional) {
  ASSERT_EQ(run_command("verify-norms", json{{"samples", 10}}, ctx("t", true)), kPass);
  EXPECT_EQ(slurp("t", "verify_norms.csv").rfind("# finsler verify-norms ", 0), 0u);
  ASSERT_EQ(run_command("verify-norms", json{{"samples", 10}}, ctx("u")), kPass);
  EXPECT_EQ(slurp("u", "verify_norms.csv").rfind("norm,", 0), 0u);
}

TEST_F(Harness, VerifyExactRows) {
  const json cfg{{"cases",
                  {{{"family", "blowup"},
                    {"norm", {{"family", "euclidean"}, {"dimension", 2}}},
                    {"lambda", 0.25},
                    {"grid", {{"lo", {-1.5, -1.5}}, {"hi", {1.5, 1.5}}, {"cells", {24, 24}}}},
                    {"t", 0.5},
                    {"dt", 0.02},
                    {"window", {{"r_max", 1.0}}}}}}};
  EXPECT_EQ(run_command("verify-exact", cfg, ctx("e")), kPass);
  const std::string csv = slurp("e", "verify_exact.csv");
  EXPECT_NE(csv.find("blowup,euclidean,min_at_origin,0.5,"), std::string::npos);
  EXPECT_NE(csv.find(",order,"), std::string::npos);
}

TEST_F(Harness, SimulateExitCodes) {
  json zero = small_flow();
  zero["datum"]["function"] = {{"form", "constant"}, {"amplitude", 0}};
  EXPECT_EQ(run_command("simulate", zero, ctx("z")), kPass);

  json unstable = small_flow();
  unstable["scheme"] = "explicit_euler";
  EXPECT_EQ(run_command("simulate", unstable, ctx("u")), kConfigError);

  json stuck = small_flow();
  stuck["inner"] = {{"max_iters", 1}};
  EXPECT_EQ(run_command("simulate", stuck, ctx("s")), kNonConvergence);
  EXPECT_FALSE(slurp("s", "monitors.csv").empty());

  json strict = small_flow();
  strict["compare"] = {{"reference", "gaussian"}, {"relative", false}, {"tolerance", 1e-9}};
  EXPECT_EQ(run_command("simulate", strict, ctx("c")), kCheckFailed);
  strict["compare"]["tolerance"] = 0.05;
  EXPECT_EQ(run_command("simulate", strict, ctx("d")), kPass);

  EXPECT_EQ(run_command("simulate", json(), ctx("n")), kConfigError);
}

TEST_F(Harness, RadialSolveCrossCheckAgainstSimulation) {
  ASSERT_EQ(run_command("simulate", small_flow(), ctx("sim")), kPass);
  const json cfg{{"norm", {{"family", "euclidean"}, {"dimension", 2}}},
                 {"profile", {{"function", {{"form", "gaussian"}, {"amplitude", 1}, {"coeff", 1}}}}},
                 {"radii", {0.0, 0.5}},
                 {"times", {0.05}},
                 {"tolerance", 1e-8},
                 {"cross_check", {{"dump", "sim/slice_001.bin"}, {"time", 0.05}, {"r_max", 1.0}, {"tolerance", 0.05}}}};
  EXPECT_EQ(run_command("radial-solve", cfg, ctx("rs")), kPass);
  EXPECT_NE(slurp("rs", "cross_check.csv").find("relative_error"), std::string::npos);
  EXPECT_EQ(slurp("rs", "radial_solve.csv").rfind("r,t,u,closed_form,abs_error\n", 0), 0u);
}

TEST_F(Harness, ClassifyExpectations) {
  json cfg{{"norm", {{"family", "euclidean"}, {"dimension", 2}}},
           {"measure", {{"kind", "radial"}, {"function", {{"form", "bump"}, {"radius", 1}}}}},
           {"lambda_grid", {0.1, 0.2}},
           {"expect", {{"admissible", true}, {"lambda_star", 0.1}}}};
  EXPECT_EQ(run_command("classify", cfg, ctx("k")), kPass);
  cfg["expect"]["lambda_star"] = 0.2;
  EXPECT_EQ(run_command("classify", cfg, ctx("l")), kCheckFailed);
}

TEST_F(Harness, CompareModes) {
  ASSERT_EQ(run_command("simulate", small_flow(), ctx("sim")), kPass);
  EXPECT_EQ(run_command("compare", json{{"a", "sim/monitors.csv"}, {"b", "sim/monitors.csv"}}, ctx("c1")), kPass);
  EXPECT_EQ(run_command("compare", json{{"a", "sim/slice_000.bin"}, {"b", "sim/slice_001.bin"}}, ctx("c2")),
            kCheckFailed);
  EXPECT_EQ(run_command("compare",
                        json{{"a", "sim/slice_000.bin"}, {"b", "sim/slice_001.bin"}, {"tolerance", 1.0}}, ctx("c3")),
            kPass);
  EXPECT_EQ(run_command("compare", json{{"a", "sim/missing.csv"}, {"b", "sim/monitors.csv"}}, ctx("c4")),
            kConfigError);
}
