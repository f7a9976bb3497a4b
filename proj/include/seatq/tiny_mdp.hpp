#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seatq/approximator.hpp"
#include "seatq/environment.hpp"
#include "seatq/rng.hpp"

namespace seatq {

// Discrete-epoch booking problem small enough to solve exactly. Each epoch:
// at most one request arrives (class c with probability arrival_probs[e][c-1],
// none otherwise) and is accepted or denied; then every held seat cancels
// independently with probability cancel_prob, refunding its fare. After the
// last epoch the overflow is bumped as in the continuous market.
struct TinyMdpSpec {
  int epochs = 4;
  int capacity = 2;
  std::vector<double> fares{300.0, 200.0};
  std::vector<double> bump_factors{2.0, 2.0};
  std::vector<std::vector<double>> arrival_probs;  // epochs x classes
  double cancel_prob = 0.0;

  int num_classes() const { return static_cast<int>(fares.size()); }
  // Same arrival distribution in every epoch.
  static TinyMdpSpec uniform(int epochs, int capacity, std::vector<double> fares,
                             std::vector<double> bump_factors,
                             std::vector<double> per_epoch_probs,
                             double cancel_prob);
  void validate() const;
};

inline constexpr std::size_t kTinyStateBudget = 1'000'000;

// Decision table indexed by (epoch, booked vector, arriving class).
class TinyPolicyTable {
 public:
  TinyPolicyTable() = default;
  TinyPolicyTable(int epochs, int classes, int max_booked);

  Action at(int epoch, const std::vector<int>& booked, int class_id) const;
  void set(int epoch, const std::vector<int>& booked, int class_id, Action a);
  int epochs() const { return epochs_; }

 private:
  std::size_t index(int epoch, const std::vector<int>& booked, int class_id) const;

  int epochs_ = 0, classes_ = 0, max_booked_ = 0;
  std::vector<Action> table_;
};

struct TinyDpResult {
  double value = 0.0;  // optimal expected total reward from the empty state
  TinyPolicyTable policy;  // ties resolved toward accept
  std::size_t states = 0;
};

// Backward induction over (epoch, booked per class). Throws
// std::length_error when the state space exceeds kTinyStateBudget.
TinyDpResult exact_dp_value(const TinyMdpSpec& spec);

// Expected total reward of a fixed decision table, by the same recursion
// without the max.
double evaluate_tiny_policy(const TinyMdpSpec& spec, const TinyPolicyTable& policy);

// Features for the shared 6-input network:
// (T/n, b_1/cap, b_2/cap, b_3/cap, epochs_left/epochs, 1), absent classes 0.
Features encode_tiny_state(const TinyMdpSpec& spec, int epoch,
                           const std::vector<int>& booked, int class_id);

// Sampled episodes of a TinyMdpSpec with the same decision-point semantics
// as BookingEnvironment: rewards from epochs without a request (refunds) are
// folded into the step that reaches the next request or the end.
class TinyMdpEnvironment {
 public:
  explicit TinyMdpEnvironment(TinyMdpSpec spec);

  struct Decision {
    int epoch = 0;
    int class_id = 0;
    std::vector<int> booked;
  };

  struct Step {
    double reward = 0.0;
    std::optional<Decision> next;  // empty once the episode ended
  };

  // Runs until the first request. Empty if the episode ends without one.
  std::optional<Decision> reset(std::uint64_t seed);
  Step step(Action action);
  bool terminal() const { return terminal_; }
  const TinyMdpSpec& spec() const { return spec_; }

 private:
  // Cancellations for the current epoch, then epochs until a request.
  double advance();
  // One uniform draw; 0 means no request this epoch.
  int draw_request(int epoch);

  TinyMdpSpec spec_;
  Engine rng_;
  int epoch_ = 0;
  int pending_class_ = 0;
  std::vector<int> booked_;
  bool terminal_ = true;
};

}  // namespace seatq
