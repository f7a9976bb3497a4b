#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "seatq/approximator.hpp"
#include "seatq/environment.hpp"
#include "seatq/market_sim.hpp"
#include "seatq/oracle_metrics.hpp"
#include "seatq/rng.hpp"
#include "seatq/tiny_mdp.hpp"

namespace seatq {

struct AgentConfig {
  double gamma = 0.99;
  std::size_t buffer_capacity = 50'000;
  std::size_t batch_size = 32;
  long warmup_steps = 1'000;
  long target_sync_interval = 500;  // in gradient updates
  double eps_start = 1.0;
  double eps_end = 0.1;
  double eps_anneal_fraction = 1.0;  // of the expected total decision steps
  double base_rate = 1e-3;
  RmsPropConfig rms;
  // Rewards are multiplied by this before they reach the replay buffer, so
  // Q-values are learned in units of 1 / reward_scale currency.
  double reward_scale = 0.01;
  long train_episodes = 10'000;

  void validate() const;
};

struct Experience {
  Features features{};
  int action = 0;
  double reward = 0.0;
  Features next_features{};  // ignored when terminal
  bool terminal = false;
};

// Fixed-capacity FIFO store; sampling is uniform with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void store(const Experience& exp);
  // Throws std::invalid_argument when size() < batch_size.
  std::vector<const Experience*> sample(std::size_t batch_size, Engine& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertions() const { return insertions_; }
  // i = 0 is the oldest stored experience.
  const Experience& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Experience> items_;
  std::size_t head_ = 0;  // slot that is overwritten next once full
  std::uint64_t insertions_ = 0;
};

// Linear from eps_start at step 0 to eps_end at eps_anneal_fraction *
// total_steps, flat afterwards.
double epsilon_at(long step, const AgentConfig& config, long total_steps);

// argmax over (q_accept, q_deny); accept on exact ties.
Action greedy_action(const std::array<double, 2>& q);

// With probability epsilon a uniformly random action, else greedy. The
// random branch consumes two draws, the greedy branch one.
Action select_action(const QNetwork& net, const Features& features, double epsilon,
                     Engine& rng);

// r for terminal experiences, r + gamma * max_a' Q_target(s', a') otherwise.
double td_target(const Experience& exp, const QNetwork& target_net, double gamma);

// Tabular form of the Q-learning step: q + alpha * (target - q).
double q_update(double q, double target, double alpha);

// Deep copy; later updates to `online` do not reach the returned network.
QNetwork sync_target(const QNetwork& online);

// Online Q-learning with replay and a periodically synchronised target.
class DqnLearner {
 public:
  DqnLearner(AgentConfig config, QNetwork initial, std::uint64_t seed,
             long total_steps);

  // epsilon-greedy at the current step count.
  Action act(const Features& features);
  // Stores the transition (reward in raw currency), then performs one
  // gradient update once past warmup and syncs the target when due.
  void observe(const Features& features, Action action, double reward,
               const std::optional<Features>& next);

  double epsilon() const;
  long steps() const { return steps_; }
  long updates() const { return updates_; }
  double last_loss() const { return last_loss_; }
  const QNetwork& online() const { return online_; }
  const QNetwork& target() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  void learn();

  AgentConfig config_;
  QNetwork online_;
  QNetwork target_;
  ReplayBuffer buffer_;
  Engine rng_;
  long total_steps_;
  long steps_ = 0;
  long updates_ = 0;
  double last_loss_ = 0.0;
  TrainingBatch batch_;
};

// Decision rule over a booking state and its encoded features.
using Policy = std::function<Action(const BookingState&, const Features&)>;

Policy greedy_policy(QNetwork net);

enum class BaselineKind { kAcceptAll, kDenyAll, kRandom };
// kRandom accepts with probability accept_prob using its own engine.
Policy baseline_policy(BaselineKind kind, double accept_prob = 0.5,
                       std::uint64_t seed = 0);

// Plays one scripted flight with `policy` and returns its trace.
EpisodeTrace run_episode(BookingEnvironment& env, const EpisodeScript& script,
                         const Policy& policy);

// Seeds used for episode i of each phase of a run with master seed `seed`.
enum class SeedPhase : std::uint64_t {
  kTrainScript = 1,
  kEvalScript = 2,
  kNetworkInit = 3,
  kLearner = 4,
};
std::uint64_t phase_seed(std::uint64_t seed, SeedPhase phase, std::uint64_t i = 0);

struct TrainResult {
  QNetwork net;
  std::vector<EpisodeMetrics> metrics;
};

using EpisodeCallback = std::function<void(std::size_t, const EpisodeMetrics&)>;

TrainResult train(const MarketConfig& market, const AgentConfig& agent,
                  std::uint64_t seed, const EpisodeCallback& on_episode = {});

// Greedy evaluation on fresh scripts (SeedPhase::kEvalScript).
std::vector<EpisodeMetrics> evaluate(const Policy& policy, const MarketConfig& market,
                                     long episodes, std::uint64_t seed);

// Training on a TinyMdpSpec; used to check learning against exact DP.
QNetwork train_tiny(const TinyMdpSpec& spec, const AgentConfig& agent,
                    long episodes, std::uint64_t seed);

// Mean total reward of the greedy policy of `net` over sampled episodes.
double estimate_tiny_greedy_value(const TinyMdpSpec& spec, const QNetwork& net,
                                  long episodes, std::uint64_t seed);

// The greedy policy of `net` written out as a decision table.
TinyPolicyTable tiny_greedy_table(const TinyMdpSpec& spec, const QNetwork& net);

}  // namespace seatq
