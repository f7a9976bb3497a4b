#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "seatq/harness.hpp"
#include "seatq/numeric_text.hpp"

namespace seatq {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("seatq_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

RunConfig quick_config(const fs::path& dir) {
  RunConfig cfg = parse_config(
      "train_episodes = 3\n"
      "eval_episodes = 4\n"
      "warmup_steps = 50\n"
      "target_sync_interval = 20\n"
      "seed = 5\n");
  cfg.place_outputs(dir);
  return cfg;
}

TEST(ParseConfig, EmptyTextGivesDefaults) {
  const RunConfig cfg = parse_config("");
  EXPECT_EQ(cfg.market.capacity, 80);
  EXPECT_EQ(cfg.market.horizon, 1000.0);
  EXPECT_EQ(cfg.market.fares, (std::vector<double>{300, 200, 100}));
  EXPECT_EQ(cfg.market.class_means, (std::vector<double>{33, 33, 34}));
  EXPECT_EQ(cfg.market.cancel_rate, 0.10);
  EXPECT_EQ(cfg.market.bump_factors, (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(cfg.agent.train_episodes, 10'000);
  EXPECT_EQ(cfg.eval_episodes, 300);
  EXPECT_EQ(cfg.class_distribution, 3);
}

TEST(ParseConfig, OverridesAndComments) {
  const RunConfig cfg = parse_config(
      "# market\n"
      "cancel_rate = 0.2   # higher\n"
      "\n"
      "beta = 1.5\n"
      "class_distribution = 1\n"
      "gamma=0.9\n");
  EXPECT_EQ(cfg.market.cancel_rate, 0.2);
  EXPECT_EQ(cfg.market.bump_factors, (std::vector<double>{1.5, 1.5, 1.5}));
  EXPECT_EQ(cfg.market.class_means, (std::vector<double>{10, 30, 60}));
  EXPECT_EQ(cfg.class_distribution, 1);
  EXPECT_EQ(cfg.agent.gamma, 0.9);
}

TEST(ParseConfig, ExplicitMeansWinOverDistributionId) {
  const RunConfig cfg = parse_config("class_means = 1,2,3\nclass_distribution = 2\n");
  EXPECT_EQ(cfg.market.class_means, (std::vector<double>{1, 2, 3}));
}

TEST(ParseConfig, ErrorsNameTheLine) {
  try {
    parse_config("capacity = 80\n\nfares = 100,200,300\n");
    FAIL() << "increasing fares accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  try {
    parse_config("capacity = 80\nbogus_key = 1\n");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_config("capacity = eighty\n"), ConfigError);
  EXPECT_THROW(parse_config("capacity 80\n"), ConfigError);
  EXPECT_THROW(parse_config("cancel_rate = 1.5\n"), std::invalid_argument);
}

TEST(RunConfig, OutputPathsMustDiffer) {
  RunConfig cfg;
  cfg.eval_csv = cfg.train_csv;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RunTrain, OneEpisodeWritesOneRowAndWeights) {
  TempDir dir;
  RunConfig cfg = quick_config(dir.path());
  cfg.agent.train_episodes = 1;
  std::ostringstream log;
  ASSERT_EQ(run_train(cfg, log), 0) << log.str();
  const auto rows = lines_of(slurp(cfg.train_csv));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].rfind("episode,revenue,", 0), 0u);
  EXPECT_EQ(split(rows[1], ',').size(), 13u);
  std::ifstream w(cfg.weights_path);
  EXPECT_NO_THROW(load_weights(w));
}

TEST(RunTrain, RepeatedRunsAreByteIdentical) {
  TempDir a, b;
  std::ostringstream log;
  const RunConfig ca = quick_config(a.path());
  const RunConfig cb = quick_config(b.path());
  ASSERT_EQ(run_train(ca, log), 0);
  ASSERT_EQ(run_train(cb, log), 0);
  EXPECT_EQ(slurp(ca.train_csv), slurp(cb.train_csv));
  EXPECT_EQ(slurp(ca.weights_path), slurp(cb.weights_path));
}

TEST(RunEval, DenyAllWeightsEarnNothing) {
  TempDir dir;
  const RunConfig cfg = quick_config(dir.path());
  QNetwork deny = init_network(1);
  deny.layers().back().weights.setZero();
  deny.layers().back().bias << -1.0, 1.0;
  {
    std::ofstream w(cfg.weights_path);
    save_weights(deny, w);
  }
  std::ostringstream log;
  ASSERT_EQ(run_eval(cfg, cfg.weights_path, log), 0) << log.str();
  const auto rows = lines_of(slurp(cfg.eval_csv));
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cols = split(rows[i], ',');
    EXPECT_EQ(cols[1], "0");  // revenue
    EXPECT_EQ(cols[5], "0");  // accepted
  }
  const auto summary = lines_of(slurp(cfg.summary_csv));
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[1], "0.1,3,0,0,0,4");
}

TEST(RunEval, RejectsZeroEpisodesAndMissingWeights) {
  TempDir dir;
  RunConfig cfg = quick_config(dir.path());
  std::ostringstream log;
  EXPECT_NE(run_eval(cfg, dir.path() / "missing.txt", log), 0);
  {
    std::ofstream w(cfg.weights_path);
    save_weights(init_network(2), w);
  }
  cfg.eval_episodes = 0;
  EXPECT_NE(run_eval(cfg, cfg.weights_path, log), 0);
}

TEST(RunGrid, NineCellsInRateThenDistributionOrder) {
  TempDir dir;
  RunConfig cfg = quick_config(dir.path());
  cfg.agent.train_episodes = 1;
  cfg.eval_episodes = 1;
  std::ostringstream log;
  ASSERT_EQ(run_grid(cfg, log), 0) << log.str();
  const auto rows = lines_of(slurp(cfg.summary_csv));
  ASSERT_EQ(rows.size(), 10u);
  int r = 1;
  for (const char* rate : {"0", "0.1", "0.2"})
    for (const char* dist : {"1", "2", "3"}) {
      const auto cols = split(rows[static_cast<std::size_t>(r++)], ',');
      ASSERT_EQ(cols.size(), 6u);
      EXPECT_EQ(cols[0], rate);
      EXPECT_EQ(cols[1], dist);
      EXPECT_EQ(cols[5], "1");
    }
}

TEST(RunOracle, OneRowPerScript) {
  std::ostringstream out;
  ASSERT_EQ(run_oracle(RunConfig{}, 3, out), 0);
  const auto rows = lines_of(out.str());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].rfind("script,seed,arrivals,oracle_revenue,", 0), 0u);
}

TEST(Checks, OnlyRunsTheNamedCheck) {
  CheckOptions opts;
  opts.only = "gradcheck";
  std::ostringstream log;
  const auto results = run_checks(opts, log);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].name, "gradcheck");
  EXPECT_TRUE(results[0].passed) << results[0].detail;
  EXPECT_EQ(log.str().rfind("PASS gradcheck", 0), 0u);
}

TEST(Checks, InjectedGradientFaultFails) {
  CheckOptions opts;
  opts.only = "gradcheck";
  opts.gradient_fault.flip_sign_layer = 1;
  std::ostringstream log;
  EXPECT_EQ(run_checks_command(opts, log), 1);
  EXPECT_NE(log.str().find("FAIL gradcheck"), std::string::npos);
}

TEST(Checks, UnknownNameIsAnError) {
  CheckOptions opts;
  opts.only = "nonsense";
  std::ostringstream log;
  EXPECT_EQ(run_checks_command(opts, log), 2);
}

}  // namespace
}  // namespace seatq
