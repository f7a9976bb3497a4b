// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "../oracles/brute_force.hpp"
#include "seatq/harness.hpp"
#include "seatq/numeric_text.hpp"

namespace {

using namespace seatq;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Runs a timed check and appends the runtime against its limit.
Outcome timed(double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o = body();
  const double s = seconds_since(t0);
  o.detail += "; runtime " + fmt(s, 1) + "s (limit " + fmt(limit_s, 0) + "s)";
  o.passed = o.passed && s < limit_s;
  return o;
}

Outcome from_check(const CheckResult& r) { return {r.passed, r.detail}; }

Outcome criterion_gradients() {
  return timed(10, [] {
    const auto r = gradient_check(kSeed);
    Outcome o;
    o.passed = r.max_relative_error < 1e-4 && r.parameters_checked >= 1000;
    o.detail = "max relative error " + format_double(r.max_relative_error) + " over " +
               std::to_string(r.parameters_checked) + " parameters";
    return o;
  });
}

Outcome criterion_simulator() {
  return timed(30, [] { return from_check(check_simulator(kSeed)); });
}

Outcome criterion_hindsight() {
  return timed(60, [] { return from_check(check_hindsight_bound(kSeed)); });
}

Outcome criterion_tiny_dp() {
  return timed(300, [] {
    const TinyMdpSpec spec = reference_tiny_spec();
    const double dp = exact_dp_value(spec).value;
    const double brute = oracle::BruteForceExpectimax(spec).value();
    Outcome o = from_check(check_tiny_dp(kSeed));
    o.detail += "; dp " + format_double(dp) + " brute force " + format_double(brute);
    o.passed = o.passed && dp == brute;
    return o;
  });
}

struct TrainedCell {
  SummaryRow summary;
  QNetwork net;
};

TrainedCell train_and_evaluate(const MarketConfig& market, std::uint64_t seed) {
  AgentConfig agent;
  agent.train_episodes = 10'000;
  auto trained = train(market, agent, seed);
  const auto metrics = evaluate(greedy_policy(trained.net), market, 300, seed);
  return {aggregate(metrics).summary, std::move(trained.net)};
}

std::string describe(const SummaryRow& s) {
  return "pct_optimal " + fmt(s.avg_pct_optimal, 2) + " acceptance " +
         fmt(s.avg_acceptance_rate, 2) + " load factor " + fmt(s.avg_load_factor, 2);
}

Outcome criterion_base_cell() {
  const auto t0 = Clock::now();
  MarketConfig market;  // cancel 10%, means 33/33/34, capacity 80, beta 2
  const auto cell = train_and_evaluate(market, kSeed);
  const auto& s = cell.summary;
  Outcome o;
  o.passed = s.avg_pct_optimal >= 88.0 && s.avg_acceptance_rate >= 75.0 &&
             s.avg_acceptance_rate <= 95.0 && s.avg_load_factor >= 80.0 &&
             s.avg_load_factor <= 102.0;
  o.detail = describe(s) + " (need >= 88, [75, 95], [80, 102]); runtime " +
             fmt(seconds_since(t0), 0) + "s";
  return o;
}

Outcome criterion_baseline_separation() {
  const auto t0 = Clock::now();
  MarketConfig market;
  market.cancel_rate = 0.0;
  const auto cell = train_and_evaluate(market, kSeed);
  const auto accept_all =
      aggregate(evaluate(baseline_policy(BaselineKind::kAcceptAll), market, 300, kSeed)).summary;
  const double gap = cell.summary.avg_pct_optimal - accept_all.avg_pct_optimal;
  Outcome o;
  o.passed = gap >= 10.0;
  o.detail = "agent " + fmt(cell.summary.avg_pct_optimal, 2) + " accept-all " +
             fmt(accept_all.avg_pct_optimal, 2) + " gap " + fmt(gap, 2) +
             " points (need >= 10); runtime " + fmt(seconds_since(t0), 0) + "s";
  return o;
}

std::string train_csv_bytes(std::uint64_t seed, QNetwork* net_out) {
  MarketConfig market;
  AgentConfig agent;
  agent.train_episodes = 200;
  auto r = train(market, agent, seed);
  std::ostringstream out;
  write_metrics_csv_header(out);
  for (std::size_t i = 0; i < r.metrics.size(); ++i) write_metrics_csv_row(out, i, r.metrics[i]);
  if (net_out) *net_out = std::move(r.net);
  return out.str();
}

Outcome criterion_determinism() {
  QNetwork net;
  const std::string a = train_csv_bytes(kSeed, &net);
  const std::string b = train_csv_bytes(kSeed, nullptr);

  std::stringstream file;
  save_weights(net, file);
  const QNetwork loaded = load_weights(file);
  Engine rng(kSeed);
  bool identical = true;
  for (int i = 0; i < 1000 && identical; ++i) {
    Features f{};
    for (double& x : f) x = 2.0 * uniform_unit(rng) - 0.5;
    identical = forward(net, f) == forward(loaded, f);
  }
  Outcome o;
  o.passed = a == b && identical;
  o.detail = std::string("train CSV ") + (a == b ? "identical" : "differs") + " (" +
             std::to_string(a.size()) + " bytes); weights round trip " +
             (identical ? "bit-identical" : "differs");
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"gradient correctness", criterion_gradients},
      {"simulator fidelity", criterion_simulator},
      {"hindsight upper bound", criterion_hindsight},
      {"exact-DP convergence", criterion_tiny_dp},
      {"base cell reproduction", criterion_base_cell},
      {"baseline separation", criterion_baseline_separation},
      {"determinism", criterion_determinism},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s %d %s: %s\n", o.passed ? "PASS" : "FAIL", index++, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
