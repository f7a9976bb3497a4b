#include "seatq/tiny_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace seatq {

TinyMdpSpec TinyMdpSpec::uniform(int epochs, int capacity, std::vector<double> fares,
                                 std::vector<double> bump_factors,
                                 std::vector<double> per_epoch_probs,
                                 double cancel_prob) {
  TinyMdpSpec spec;
  spec.epochs = epochs;
  spec.capacity = capacity;
  spec.fares = std::move(fares);
  spec.bump_factors = std::move(bump_factors);
  spec.arrival_probs.assign(static_cast<std::size_t>(std::max(epochs, 0)),
                            per_epoch_probs);
  spec.cancel_prob = cancel_prob;
  return spec;
}

void TinyMdpSpec::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (capacity < 1 || capacity > 4) throw std::invalid_argument("capacity must be in 1..4");
  if (fares.empty() || fares.size() > 3)
    throw std::invalid_argument("tiny MDP supports one to three classes");
  if (bump_factors.size() != fares.size())
    throw std::invalid_argument("bump_factors must match fares");
  for (std::size_t i = 0; i < fares.size(); ++i) {
    if (!(fares[i] > 0.0)) throw std::invalid_argument("fares must be positive");
    if (i > 0 && !(fares[i] < fares[i - 1]))
      throw std::invalid_argument("fares must strictly decrease");
    if (!(bump_factors[i] >= 0.0)) throw std::invalid_argument("bump factors must be >= 0");
  }
  if (arrival_probs.size() != static_cast<std::size_t>(epochs))
    throw std::invalid_argument("arrival_probs needs one row per epoch");
  for (const auto& row : arrival_probs) {
    if (row.size() != fares.size())
      throw std::invalid_argument("arrival_probs row needs one entry per class");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw std::invalid_argument("arrival probabilities must be >= 0");
      sum += p;
    }
    if (sum > 1.0 + 1e-12) throw std::invalid_argument("arrival probabilities exceed 1");
  }
  if (!(cancel_prob >= 0.0 && cancel_prob <= 1.0))
    throw std::invalid_argument("cancel_prob must lie in [0, 1]");
}

namespace {

MarketConfig bumping_config(const TinyMdpSpec& spec) {
  MarketConfig cfg;
  cfg.capacity = spec.capacity;
  cfg.horizon = spec.epochs;
  cfg.fares = spec.fares;
  cfg.bump_factors = spec.bump_factors;
  cfg.class_means.assign(spec.fares.size(), 0.0);
  cfg.cancel_rate = spec.cancel_prob;
  return cfg;
}

// Mixed-radix indexing of booked vectors with each count in [0, epochs].
struct BookedIndexer {
  int radix;
  int classes;

  std::size_t size() const {
    std::size_t n = 1;
    for (int i = 0; i < classes; ++i) n *= static_cast<std::size_t>(radix);
    return n;
  }
  std::size_t index(const std::vector<int>& b) const {
    std::size_t k = 0;
    for (int i = classes; i-- > 0;) k = k * static_cast<std::size_t>(radix) + static_cast<std::size_t>(b[static_cast<std::size_t>(i)]);
    return k;
  }
  std::vector<int> decode(std::size_t k) const {
    std::vector<int> b(static_cast<std::size_t>(classes));
    for (int i = 0; i < classes; ++i) {
      b[static_cast<std::size_t>(i)] = static_cast<int>(k % static_cast<std::size_t>(radix));
      k /= static_cast<std::size_t>(radix);
    }
    return b;
  }
};

double binomial_pmf(int n, int k, double p) {
  double coeff = 1.0;
  for (int i = 1; i <= k; ++i) coeff = coeff * (n - k + i) / i;
  return coeff * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

// E[-refunds + next(b - cancelled)] over independent per-seat cancellations.
double after_cancellations(const TinyMdpSpec& spec, const BookedIndexer& ix,
                           const std::vector<double>& next,
                           const std::vector<int>& booked) {
  const auto n = booked.size();
  std::vector<int> k(n, 0);
  double total = 0.0;
  std::function<void(std::size_t, double, double)> rec =
      [&](std::size_t c, double prob, double refund) {
        if (c == n) {
          std::vector<int> left(n);
          for (std::size_t i = 0; i < n; ++i) left[i] = booked[i] - k[i];
          total += prob * (refund + next[ix.index(left)]);
          return;
        }
        for (int j = 0; j <= booked[c]; ++j) {
          k[c] = j;
          rec(c + 1, prob * binomial_pmf(booked[c], j, spec.cancel_prob),
              refund - j * spec.fares[c]);
        }
      };
  rec(0, 1.0, 0.0);
  return total;
}

std::size_t checked_state_count(const TinyMdpSpec& spec) {
  spec.validate();
  if (static_cast<std::size_t>(spec.epochs) >= kTinyStateBudget)
    throw std::length_error("tiny MDP state space exceeds enumeration budget");
  const BookedIndexer ix{spec.epochs + 1, spec.num_classes()};
  // Guard the multiplication itself as well as the budget.
  if (ix.size() > kTinyStateBudget ||
      ix.size() * static_cast<std::size_t>(spec.epochs) > kTinyStateBudget)
    throw std::length_error("tiny MDP state space exceeds enumeration budget");
  return ix.size() * static_cast<std::size_t>(spec.epochs);
}

template <typename Choose>
double backward_induction(const TinyMdpSpec& spec, Choose&& choose) {
  checked_state_count(spec);
  const BookedIndexer ix{spec.epochs + 1, spec.num_classes()};
  const MarketConfig bump_cfg = bumping_config(spec);

  std::vector<double> next(ix.size(), 0.0);
  for (std::size_t k = 0; k < ix.size(); ++k) {
    const auto b = ix.decode(k);
    next[k] = terminal_bumping(b, bump_cfg).cost;
  }
  for (int e = spec.epochs - 1; e >= 0; --e) {
    // Continuation values C(b) for every b that can follow this epoch's
    // decision (at most e + 1 seats).
    std::vector<double> cont(ix.size(), 0.0);
    for (std::size_t k = 0; k < ix.size(); ++k) {
      const auto b = ix.decode(k);
      if (std::accumulate(b.begin(), b.end(), 0) <= e + 1)
        cont[k] = after_cancellations(spec, ix, next, b);
    }
    std::vector<double> value(ix.size(), 0.0);
    const auto& probs = spec.arrival_probs[static_cast<std::size_t>(e)];
    const double p_none = 1.0 - std::accumulate(probs.begin(), probs.end(), 0.0);
    for (std::size_t k = 0; k < ix.size(); ++k) {
      auto b = ix.decode(k);
      if (std::accumulate(b.begin(), b.end(), 0) > e) continue;
      double v = p_none * cont[k];
      for (int c = 1; c <= spec.num_classes(); ++c) {
        const auto ci = static_cast<std::size_t>(c - 1);
        if (probs[ci] == 0.0) continue;
        ++b[ci];
        const double accept = spec.fares[ci] + cont[ix.index(b)];
        --b[ci];
        const double deny = cont[k];
        v += probs[ci] * choose(e, b, c, accept, deny);
      }
      value[k] = v;
    }
    next = std::move(value);
  }
  return next[0];
}

}  // namespace

TinyPolicyTable::TinyPolicyTable(int epochs, int classes, int max_booked)
    : epochs_(epochs), classes_(classes), max_booked_(max_booked) {
  const BookedIndexer ix{max_booked + 1, classes};
  table_.assign(static_cast<std::size_t>(epochs) * ix.size() *
                    static_cast<std::size_t>(classes),
                Action::kAccept);
}

std::size_t TinyPolicyTable::index(int epoch, const std::vector<int>& booked,
                                   int class_id) const {
  const BookedIndexer ix{max_booked_ + 1, classes_};
  if (epoch < 0 || epoch >= epochs_ || class_id < 1 || class_id > classes_ ||
      static_cast<int>(booked.size()) != classes_)
    throw std::out_of_range("policy table index");
  for (int b : booked)
    if (b < 0 || b > max_booked_) throw std::out_of_range("policy table booked count");
  return (static_cast<std::size_t>(epoch) * ix.size() + ix.index(booked)) *
             static_cast<std::size_t>(classes_) +
         static_cast<std::size_t>(class_id - 1);
}

Action TinyPolicyTable::at(int epoch, const std::vector<int>& booked, int class_id) const {
  return table_[index(epoch, booked, class_id)];
}

void TinyPolicyTable::set(int epoch, const std::vector<int>& booked, int class_id,
                          Action a) {
  table_[index(epoch, booked, class_id)] = a;
}

TinyDpResult exact_dp_value(const TinyMdpSpec& spec) {
  TinyDpResult out;
  out.states = checked_state_count(spec);
  out.policy = TinyPolicyTable(spec.epochs, spec.num_classes(), spec.epochs);
  out.value = backward_induction(
      spec, [&](int e, const std::vector<int>& b, int c, double accept, double deny) {
        const Action a = accept >= deny ? Action::kAccept : Action::kDeny;
        out.policy.set(e, b, c, a);
        return a == Action::kAccept ? accept : deny;
      });
  return out;
}

double evaluate_tiny_policy(const TinyMdpSpec& spec, const TinyPolicyTable& policy) {
  return backward_induction(
      spec, [&](int e, const std::vector<int>& b, int c, double accept, double deny) {
        return policy.at(e, b, c) == Action::kAccept ? accept : deny;
      });
}

Features encode_tiny_state(const TinyMdpSpec& spec, int epoch,
                           const std::vector<int>& booked, int class_id) {
  Features f{};
  f[0] = static_cast<double>(class_id) / spec.num_classes();
  for (std::size_t i = 0; i < 3; ++i)
    f[1 + i] = i < booked.size() ? static_cast<double>(booked[i]) / spec.capacity : 0.0;
  f[4] = static_cast<double>(spec.epochs - epoch) / spec.epochs;
  f[5] = 1.0;
  return f;
}

TinyMdpEnvironment::TinyMdpEnvironment(TinyMdpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

std::optional<TinyMdpEnvironment::Decision> TinyMdpEnvironment::reset(std::uint64_t seed) {
  rng_ = Engine(seed);
  epoch_ = 0;
  booked_.assign(spec_.fares.size(), 0);
  terminal_ = false;
  pending_class_ = 0;

  pending_class_ = draw_request(0);
  if (pending_class_ == 0) {
    // No request in epoch 0; nothing is held, so no reward can accrue.
    advance();
    if (terminal_) return std::nullopt;
  }
  return Decision{epoch_, pending_class_, booked_};
}

int TinyMdpEnvironment::draw_request(int epoch) {
  const double u = uniform_unit(rng_);
  double cum = 0.0;
  const auto& probs = spec_.arrival_probs[static_cast<std::size_t>(epoch)];
  for (std::size_t c = 0; c < probs.size(); ++c) {
    cum += probs[c];
    if (u < cum) return static_cast<int>(c) + 1;
  }
  return 0;
}

double TinyMdpEnvironment::advance() {
  double reward = 0.0;
  while (true) {
    for (std::size_t c = 0; c < booked_.size(); ++c) {
      const int held = booked_[c];
      for (int s = 0; s < held; ++s) {
        if (bernoulli(rng_, spec_.cancel_prob)) {
          --booked_[c];
          reward -= spec_.fares[c];
        }
      }
    }
    ++epoch_;
    if (epoch_ == spec_.epochs) {
      reward += terminal_bumping(booked_, bumping_config(spec_)).cost;
      terminal_ = true;
      pending_class_ = 0;
      return reward;
    }
    pending_class_ = draw_request(epoch_);
    if (pending_class_ != 0) return reward;
  }
}

TinyMdpEnvironment::Step TinyMdpEnvironment::step(Action action) {
  if (terminal_) throw std::logic_error("step called on a terminal episode");
  Step out;
  if (action == Action::kAccept) {
    const auto ci = static_cast<std::size_t>(pending_class_ - 1);
    ++booked_[ci];
    out.reward = spec_.fares[ci];
  }
  out.reward += advance();
  if (!terminal_) out.next = Decision{epoch_, pending_class_, booked_};
  return out;
}

}  // namespace seatq
