#include "seatq/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace seatq {

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(eps_end >= 0.0 && eps_end <= eps_start && eps_start <= 1.0))
    throw std::invalid_argument("need 0 <= eps_end <= eps_start <= 1");
  if (!(eps_anneal_fraction > 0.0)) throw std::invalid_argument("eps_anneal_fraction must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (batch_size > buffer_capacity)
    throw std::invalid_argument("batch_size must not exceed buffer_capacity");
  if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be >= 0");
  if (target_sync_interval < 1) throw std::invalid_argument("target_sync_interval must be >= 1");
  if (!(base_rate > 0.0)) throw std::invalid_argument("base_rate must be positive");
  if (!(rms.decay >= 0.0 && rms.decay < 1.0)) throw std::invalid_argument("rms decay must lie in [0, 1)");
  if (!(rms.epsilon > 0.0)) throw std::invalid_argument("rms epsilon must be positive");
  if (!(reward_scale > 0.0)) throw std::invalid_argument("reward_scale must be positive");
  if (train_episodes < 0) throw std::invalid_argument("train_episodes must be >= 0");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw std::invalid_argument("replay capacity must be >= 1");
  items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::store(const Experience& exp) {
  if (items_.size() < capacity_) {
    items_.push_back(exp);
  } else {
    items_[head_] = exp;
    head_ = (head_ + 1) % capacity_;
  }
  ++insertions_;
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t batch_size,
                                                    Engine& rng) const {
  if (batch_size > items_.size())
    throw std::invalid_argument("replay buffer holds fewer experiences than the batch size");
  std::vector<const Experience*> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    out.push_back(&items_[uniform_index(rng, items_.size())]);
  return out;
}

const Experience& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("replay index");
  return items_.size() < capacity_ ? items_[i] : items_[(head_ + i) % capacity_];
}

double epsilon_at(long step, const AgentConfig& config, long total_steps) {
  const double span = config.eps_anneal_fraction * static_cast<double>(std::max(total_steps, 1L));
  const double frac = std::clamp(static_cast<double>(std::max(step, 0L)) / span, 0.0, 1.0);
  return std::lerp(config.eps_start, config.eps_end, frac);
}

Action greedy_action(const std::array<double, 2>& q) {
  return q[0] >= q[1] ? Action::kAccept : Action::kDeny;
}

Action select_action(const QNetwork& net, const Features& features, double epsilon,
                     Engine& rng) {
  if (uniform_unit(rng) < epsilon) return action_from_index(static_cast<int>(uniform_index(rng, 2)));
  return greedy_action(forward(net, features));
}

double td_target(const Experience& exp, const QNetwork& target_net, double gamma) {
  if (exp.terminal) return exp.reward;
  const auto q = forward(target_net, exp.next_features);
  return exp.reward + gamma * std::max(q[0], q[1]);
}

double q_update(double q, double target, double alpha) {
  return q + alpha * (target - q);
}

QNetwork sync_target(const QNetwork& online) { return online; }

DqnLearner::DqnLearner(AgentConfig config, QNetwork initial, std::uint64_t seed,
                       long total_steps)
    : config_(std::move(config)),
      online_(std::move(initial)),
      target_(sync_target(online_)),
      buffer_(config_.buffer_capacity),
      rng_(seed),
      total_steps_(std::max(total_steps, 1L)) {
  config_.validate();
  batch_.inputs.resize(online_.input_size(), static_cast<Eigen::Index>(config_.batch_size));
  batch_.actions.resize(config_.batch_size);
  batch_.targets.resize(static_cast<Eigen::Index>(config_.batch_size));
}

double DqnLearner::epsilon() const { return epsilon_at(steps_, config_, total_steps_); }

Action DqnLearner::act(const Features& features) {
  return select_action(online_, features, epsilon(), rng_);
}

void DqnLearner::observe(const Features& features, Action action, double reward,
                         const std::optional<Features>& next) {
  Experience exp;
  exp.features = features;
  exp.action = action_index(action);
  exp.reward = reward * config_.reward_scale;
  exp.terminal = !next.has_value();
  if (next) exp.next_features = *next;
  buffer_.store(exp);
  ++steps_;
  if (steps_ > config_.warmup_steps && buffer_.size() >= config_.batch_size) learn();
}

void DqnLearner::learn() {
  const auto picks = buffer_.sample(config_.batch_size, rng_);
  const auto b = static_cast<Eigen::Index>(picks.size());
  Eigen::MatrixXd next(online_.input_size(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Experience& e = *picks[static_cast<std::size_t>(j)];
    for (int r = 0; r < online_.input_size(); ++r) {
      batch_.inputs(r, j) = e.features[static_cast<std::size_t>(r)];
      next(r, j) = e.next_features[static_cast<std::size_t>(r)];
    }
    batch_.actions[static_cast<std::size_t>(j)] = e.action;
  }
  // Batched form of td_target.
  const Eigen::MatrixXd q_next = target_.forward_batch(next);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Experience& e = *picks[static_cast<std::size_t>(j)];
    batch_.targets(j) =
        e.terminal ? e.reward : e.reward + config_.gamma * q_next.col(j).maxCoeff();
  }
  LossGradients lg = td_gradients(online_, batch_);
  apply_update(online_, lg.gradients, config_.base_rate, config_.rms);
  last_loss_ = lg.loss;
  ++updates_;
  if (updates_ % config_.target_sync_interval == 0) target_ = sync_target(online_);
}

Policy greedy_policy(QNetwork net) {
  return [net = std::move(net)](const BookingState&, const Features& f) {
    return greedy_action(forward(net, f));
  };
}

Policy baseline_policy(BaselineKind kind, double accept_prob, std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::kAcceptAll:
      return [](const BookingState&, const Features&) { return Action::kAccept; };
    case BaselineKind::kDenyAll:
      return [](const BookingState&, const Features&) { return Action::kDeny; };
    case BaselineKind::kRandom:
      if (!(accept_prob >= 0.0 && accept_prob <= 1.0))
        throw std::invalid_argument("accept probability must lie in [0, 1]");
      return [accept_prob, rng = Engine(seed)](const BookingState&, const Features&) mutable {
        return bernoulli(rng, accept_prob) ? Action::kAccept : Action::kDeny;
      };
  }
  throw std::invalid_argument("unknown baseline");
}

EpisodeTrace run_episode(BookingEnvironment& env, const EpisodeScript& script,
                         const Policy& policy) {
  auto state = env.reset(script);
  const bool encodable = env.config().num_classes() == 3;
  while (state) {
    const Features f = encodable ? encode_state(*state, env.config()) : Features{};
    state = env.step(policy(*state, f)).next_state;
  }
  return env.trace();
}

std::uint64_t phase_seed(std::uint64_t seed, SeedPhase phase, std::uint64_t i) {
  return derive_seed(seed, static_cast<std::uint64_t>(phase), i);
}

TrainResult train(const MarketConfig& market, const AgentConfig& agent,
                  std::uint64_t seed, const EpisodeCallback& on_episode) {
  market.validate();
  agent.validate();
  TrainResult result{init_network(phase_seed(seed, SeedPhase::kNetworkInit)), {}};
  if (agent.train_episodes == 0) return result;

  const long total_steps = std::max(
      1L, std::lround(static_cast<double>(agent.train_episodes) * market.total_mean()));
  DqnLearner learner(agent, result.net, phase_seed(seed, SeedPhase::kLearner), total_steps);
  BookingEnvironment env(market);
  result.metrics.reserve(static_cast<std::size_t>(agent.train_episodes));

  for (long i = 0; i < agent.train_episodes; ++i) {
    const EpisodeScript script = generate_script(
        market, phase_seed(seed, SeedPhase::kTrainScript, static_cast<std::uint64_t>(i)));
    auto state = env.reset(script);
    while (state) {
      const Features f = encode_state(*state, market);
      const Action a = learner.act(f);
      const StepOutcome out = env.step(a);
      std::optional<Features> next;
      if (out.next_state) next = encode_state(*out.next_state, market);
      learner.observe(f, a, out.reward, next);
      state = out.next_state;
    }
    EpisodeMetrics m =
        episode_metrics(env.trace(), hindsight_optimal(script, market).revenue, market);
    m.epsilon = learner.epsilon();
    result.metrics.push_back(m);
    if (on_episode) on_episode(static_cast<std::size_t>(i), result.metrics.back());
  }
  result.net = learner.online();
  return result;
}

std::vector<EpisodeMetrics> evaluate(const Policy& policy, const MarketConfig& market,
                                     long episodes, std::uint64_t seed) {
  market.validate();
  BookingEnvironment env(market);
  std::vector<EpisodeMetrics> out;
  for (long i = 0; i < episodes; ++i) {
    const EpisodeScript script = generate_script(
        market, phase_seed(seed, SeedPhase::kEvalScript, static_cast<std::uint64_t>(i)));
    const EpisodeTrace trace = run_episode(env, script, policy);
    out.push_back(episode_metrics(trace, hindsight_optimal(script, market).revenue, market));
  }
  return out;
}

QNetwork train_tiny(const TinyMdpSpec& spec, const AgentConfig& agent, long episodes,
                    std::uint64_t seed) {
  spec.validate();
  double requests_per_episode = 0.0;
  for (const auto& row : spec.arrival_probs)
    requests_per_episode += std::accumulate(row.begin(), row.end(), 0.0);
  const long total_steps = std::max(
      1L, std::lround(static_cast<double>(episodes) * requests_per_episode));
  DqnLearner learner(agent, init_network(phase_seed(seed, SeedPhase::kNetworkInit)),
                     phase_seed(seed, SeedPhase::kLearner), total_steps);
  TinyMdpEnvironment env(spec);
  for (long i = 0; i < episodes; ++i) {
    auto d = env.reset(phase_seed(seed, SeedPhase::kTrainScript, static_cast<std::uint64_t>(i)));
    while (d) {
      const Features f = encode_tiny_state(spec, d->epoch, d->booked, d->class_id);
      const Action a = learner.act(f);
      auto step = env.step(a);
      std::optional<Features> next;
      if (step.next)
        next = encode_tiny_state(spec, step.next->epoch, step.next->booked, step.next->class_id);
      learner.observe(f, a, step.reward, next);
      d = std::move(step.next);
    }
  }
  return learner.online();
}

double estimate_tiny_greedy_value(const TinyMdpSpec& spec, const QNetwork& net,
                                  long episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("need at least one episode");
  TinyMdpEnvironment env(spec);
  double total = 0.0;
  for (long i = 0; i < episodes; ++i) {
    auto d = env.reset(phase_seed(seed, SeedPhase::kEvalScript, static_cast<std::uint64_t>(i)));
    while (d) {
      const auto q = forward(net, encode_tiny_state(spec, d->epoch, d->booked, d->class_id));
      auto step = env.step(greedy_action(q));
      total += step.reward;
      d = std::move(step.next);
    }
  }
  return total / static_cast<double>(episodes);
}

TinyPolicyTable tiny_greedy_table(const TinyMdpSpec& spec, const QNetwork& net) {
  spec.validate();
  TinyPolicyTable table(spec.epochs, spec.num_classes(), spec.epochs);
  std::vector<int> booked(static_cast<std::size_t>(spec.num_classes()), 0);
  // Every booked vector with at most `epoch` seats in total.
  std::function<void(int, std::size_t, int)> fill = [&](int epoch, std::size_t c, int left) {
    if (c == booked.size()) {
      for (int k = 1; k <= spec.num_classes(); ++k)
        table.set(epoch, booked, k,
                  greedy_action(forward(net, encode_tiny_state(spec, epoch, booked, k))));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      booked[c] = v;
      fill(epoch, c + 1, left - v);
    }
    booked[c] = 0;
  };
  for (int e = 0; e < spec.epochs; ++e) fill(e, 0, e);
  return table;
}

}  // namespace seatq
