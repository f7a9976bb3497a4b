#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "seatq/harness.hpp"

namespace {

seatq::RunConfig resolve_config(const std::string& config_path,
                                const std::optional<std::uint64_t>& seed,
                                const std::string& out_dir) {
  seatq::RunConfig cfg =
      config_path.empty() ? seatq::parse_config("") : seatq::load_config(config_path);
  if (seed) cfg.seed = *seed;
  cfg.place_outputs(out_dir);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seat inventory control with deep Q-learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "directory for relative output paths");

  auto* train = app.add_subcommand("train", "train an agent, write training CSV and weights");
  auto* eval = app.add_subcommand("eval", "evaluate saved weights greedily");
  std::string weights;
  eval->add_option("--weights", weights, "weights file (default: configured path)");
  auto* grid = app.add_subcommand("grid", "train and evaluate every cancel-rate x class-mix cell");
  auto* oracle = app.add_subcommand("oracle", "print hindsight-optimal revenue for N scripts");
  long scripts = 10;
  oracle->add_option("-n,--scripts", scripts, "number of scripts")->check(CLI::NonNegativeNumber);
  auto* checks = app.add_subcommand("checks", "run the built-in verification checks");
  std::string only;
  int fault_layer = -1;
  checks->add_option("--only", only, "run a single check")
      ->check(CLI::IsMember(seatq::kCheckNames));
  checks->add_option("--inject-gradient-fault", fault_layer,
                     "negate one layer's analytic gradients (self-test of gradcheck)");

  for (auto* sub : {train, eval, grid, oracle, checks}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*checks) {
      seatq::CheckOptions opts;
      if (!only.empty()) opts.only = only;
      opts.gradient_fault.flip_sign_layer = fault_layer;
      if (seed) opts.seed = *seed;
      return seatq::run_checks_command(opts, std::cout);
    }
    const auto cfg = resolve_config(config_path, seed, out_dir);
    if (*train) return seatq::run_train(cfg, std::cout);
    if (*eval) return seatq::run_eval(cfg, weights.empty() ? cfg.weights_path : std::filesystem::path(weights), std::cout);
    if (*grid) return seatq::run_grid(cfg, std::cout);
    if (*oracle) return seatq::run_oracle(cfg, scripts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
