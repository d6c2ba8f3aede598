#include "commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  using namespace finsler::cli;
  CLI::App app{"Finsler heat-flow experiments: norm identities, exact solutions, flows, classification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool no_timestamp = false;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (created if missing)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for sampled procedures");
  app.add_flag("--no-timestamp", no_timestamp, "omit the timestamp comment line from CSV outputs");

  for (const char* name : {"verify-norms", "verify-exact", "simulate", "radial-solve", "classify", "compare"}) {
    app.add_subcommand(name)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.timestamp = !no_timestamp;
  ctx.log = &std::cout;
  if (seed_opt->count() > 0) ctx.seed = seed;

  json cfg;
  try {
    if (!config_path.empty()) {
      cfg = load_config(config_path);
      ctx.config_dir = std::filesystem::path(config_path).parent_path().string();
      if (ctx.config_dir.empty()) ctx.config_dir = ".";
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
  return run_command(command, cfg, ctx);
}
