#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "seatq/market_sim.hpp"

namespace seatq {

// Output index order of the Q-network: accept is 0, deny is 1.
enum class Action : int { kAccept = 0, kDeny = 1 };

constexpr int action_index(Action a) { return static_cast<int>(a); }
constexpr Action action_from_index(int i) {
  return i == 0 ? Action::kAccept : Action::kDeny;
}

// (T, b_1..b_n, t): class of the pending request, seats held per class,
// days remaining.
struct BookingState {
  int latest_class = 1;
  std::vector<int> booked;
  double time_remaining = 0.0;

  friend bool operator==(const BookingState&, const BookingState&) = default;
};

struct BumpingOutcome {
  std::vector<int> bumped;  // per class
  double cost = 0.0;        // <= 0

  int total() const;
};

struct StepOutcome {
  double reward = 0.0;
  std::optional<BookingState> next_state;  // empty once departed
  std::vector<int> cancellations;          // per class, since last decision
  std::optional<BumpingOutcome> bumping;   // set on the terminal outcome

  bool terminal() const { return !next_state.has_value(); }
};

enum class EventKind { kArrive, kCancel, kDepart };

struct TraceEvent {
  double time = 0.0;
  EventKind kind = EventKind::kArrive;
  int class_id = 0;  // 0 for departure
  std::optional<Action> action;
  double reward = 0.0;
  std::vector<int> booked;  // after the event
};

struct EpisodeTrace {
  std::vector<TraceEvent> events;
  std::vector<StepOutcome> outcomes;
  int arrivals = 0;
  int accepted = 0;
  std::vector<int> booked_at_departure;  // post-cancellation, pre-bumping
  BumpingOutcome bumping;

  bool complete() const {
    return !outcomes.empty() && outcomes.back().terminal();
  }
};

// Overflow is bumped from class 1 downward; cost = -sum(eta * beta * fare).
BumpingOutcome terminal_bumping(std::span<const int> booked,
                                const MarketConfig& config);

// One flight. Decision points are passenger arrivals; cancellations of sold
// seats and departure are folded into the reward of the step that reaches
// them.
class BookingEnvironment {
 public:
  explicit BookingEnvironment(MarketConfig config);

  // Positions at the first arrival. Returns nothing (and the episode is
  // already terminal with zero revenue) when the script is empty.
  std::optional<BookingState> reset(const EpisodeScript& script);

  // Throws std::logic_error when called on a terminal episode.
  StepOutcome step(Action action);

  bool terminal() const { return terminal_; }
  const BookingState& state() const { return state_; }
  const EpisodeTrace& trace() const { return trace_; }
  const MarketConfig& config() const { return config_; }

 private:
  struct PendingCancel {
    double time;
    int class_id;
    std::uint64_t seq;
  };

  // Applies every pending cancellation at or after `until` (days remaining).
  double process_cancellations(double until, std::vector<int>& counts);
  StepOutcome depart(double reward, std::vector<int> counts);

  MarketConfig config_;
  std::vector<PassengerRecord> passengers_;
  std::size_t next_passenger_ = 0;
  BookingState state_;
  std::vector<PendingCancel> pending_;  // heap, earliest event on top
  std::uint64_t seq_ = 0;
  bool terminal_ = true;
  EpisodeTrace trace_;
};

// Sum of all step rewards. Throws std::invalid_argument if the trace does
// not end in a terminal outcome.
double episode_revenue(std::span<const StepOutcome> outcomes);

using Features = std::array<double, 6>;

// (T/n, b_1/cap, b_2/cap, b_3/cap, t/horizon, 1). Three classes only.
Features encode_state(const BookingState& state, const MarketConfig& config);

// `t=<decimal> event=<arrive|cancel|depart> class=<int>
//  action=<accept|deny|-> reward=<decimal> booked=<b1,b2,b3>` per event.
void write_trace(std::ostream& out, const EpisodeTrace& trace);

}  // namespace seatq
