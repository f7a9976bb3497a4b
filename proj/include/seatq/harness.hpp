#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seatq/agent.hpp"
#include "seatq/market_sim.hpp"
#include "seatq/tiny_mdp.hpp"

namespace seatq {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(int line, const std::string& what)
      : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + what
                                       : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct RunConfig {
  MarketConfig market;
  AgentConfig agent;
  std::uint64_t seed = 1;
  long eval_episodes = 300;
  int moving_window = kDefaultMovingWindow;

  // Class-mix ids used by `grid` and summary rows. The id of the configured
  // market mix is class_distribution.
  int class_distribution = 3;
  std::map<int, std::vector<double>> distributions{
      {1, {10.0, 30.0, 60.0}}, {2, {60.0, 30.0, 10.0}}, {3, {33.0, 33.0, 34.0}}};
  std::vector<double> grid_cancel_rates{0.0, 0.10, 0.20};

  std::filesystem::path weights_path = "weights.txt";
  std::filesystem::path train_csv = "train.csv";
  std::filesystem::path eval_csv = "eval.csv";
  std::filesystem::path summary_csv = "summary.csv";

  void validate() const;
  // Resolves relative output paths against `dir`.
  void place_outputs(const std::filesystem::path& dir);
};

// `key=value` lines, `#` comments, comma-separated lists. Omitted keys keep
// their defaults. Throws ConfigError naming the offending line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Each command returns a process exit status and reports to `log`.
int run_train(const RunConfig& config, std::ostream& log);
int run_eval(const RunConfig& config, const std::filesystem::path& weights,
             std::ostream& log);
int run_grid(const RunConfig& config, std::ostream& log);
// One CSV row per script: script,seed,arrivals,oracle_revenue,alloc_c1..
int run_oracle(const RunConfig& config, long scripts, std::ostream& out);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckOptions {
  std::optional<std::string> only;
  GradientFault gradient_fault;
  std::uint64_t seed = 1;
};

inline const std::vector<std::string> kCheckNames{"gradcheck", "simulator",
                                                  "hindsight-bound", "tiny-dp"};

CheckResult check_gradients(std::uint64_t seed, GradientFault fault = {});
// Class means and cancellation fractions over 10,000 scripts per rate.
CheckResult check_simulator(std::uint64_t seed);
CheckResult check_hindsight_bound(std::uint64_t seed);
// Greedy value of a DQN trained on reference_tiny_spec() against exact DP.
CheckResult check_tiny_dp(std::uint64_t seed);

std::vector<CheckResult> run_checks(const CheckOptions& options, std::ostream& log);
int run_checks_command(const CheckOptions& options, std::ostream& log);

// 4 epochs, capacity 2, fares (300, 200), bump factor 2, per-epoch request
// probabilities (0.3, 0.5), 10% per-seat cancellation per epoch.
TinyMdpSpec reference_tiny_spec();
// Agent settings used to learn reference_tiny_spec().
AgentConfig tiny_agent_config();
inline constexpr long kTinyTrainEpisodes = 20'000;
inline constexpr long kTinyEvalEpisodes = 50'000;

}  // namespace seatq
