#include "seatq/environment.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "seatq/numeric_text.hpp"

namespace seatq {

int BumpingOutcome::total() const {
  return std::accumulate(bumped.begin(), bumped.end(), 0);
}

BumpingOutcome terminal_bumping(std::span<const int> booked,
                                const MarketConfig& config) {
  const auto n = static_cast<std::size_t>(config.num_classes());
  if (booked.size() != n)
    throw std::invalid_argument("booked counts do not match fare classes");
  BumpingOutcome out;
  out.bumped.assign(n, 0);
  const long total = std::accumulate(booked.begin(), booked.end(), 0L);
  long overflow = std::max(0L, total - config.capacity);
  for (std::size_t i = 0; i < n && overflow > 0; ++i) {
    const long eta = std::min<long>(booked[i], overflow);
    out.bumped[i] = static_cast<int>(eta);
    overflow -= eta;
    out.cost -= static_cast<double>(eta) * config.bump_factors[i] * config.fares[i];
  }
  return out;
}

namespace {

// Heap order: the pending cancellation with the most days remaining (the
// earliest in calendar time) is on top; ties by insertion order.
struct LaterCancel {
  template <typename P>
  bool operator()(const P& a, const P& b) const {
    if (a.time != b.time) return a.time < b.time;
    return a.seq > b.seq;
  }
};

}  // namespace

BookingEnvironment::BookingEnvironment(MarketConfig config)
    : config_(std::move(config)) {
  config_.validate();
}

std::optional<BookingState> BookingEnvironment::reset(
    const EpisodeScript& script) {
  passengers_ = script.passengers;
  next_passenger_ = 0;
  pending_.clear();
  seq_ = 0;
  trace_ = EpisodeTrace{};
  state_ = BookingState{};
  state_.booked.assign(static_cast<std::size_t>(config_.num_classes()), 0);

  for (const auto& p : passengers_) {
    if (p.class_id < 1 || p.class_id > config_.num_classes())
      throw std::invalid_argument("script passenger has unknown class " +
                                  std::to_string(p.class_id));
  }

  if (passengers_.empty()) {
    terminal_ = false;
    state_.time_remaining = 0.0;
    depart(0.0, std::vector<int>(state_.booked.size(), 0));
    return std::nullopt;
  }
  terminal_ = false;
  state_.latest_class = passengers_.front().class_id;
  state_.time_remaining = passengers_.front().arrival_time;
  return state_;
}

double BookingEnvironment::process_cancellations(double until,
                                                 std::vector<int>& counts) {
  double refund = 0.0;
  while (!pending_.empty() && pending_.front().time >= until) {
    std::pop_heap(pending_.begin(), pending_.end(), LaterCancel{});
    const PendingCancel c = pending_.back();
    pending_.pop_back();
    const auto idx = static_cast<std::size_t>(c.class_id - 1);
    --state_.booked[idx];
    ++counts[idx];
    const double r = -config_.fares[idx];
    refund += r;
    trace_.events.push_back(
        {c.time, EventKind::kCancel, c.class_id, std::nullopt, r, state_.booked});
  }
  return refund;
}

StepOutcome BookingEnvironment::depart(double reward, std::vector<int> counts) {
  reward += process_cancellations(0.0, counts);
  state_.time_remaining = 0.0;
  trace_.booked_at_departure = state_.booked;
  trace_.bumping = terminal_bumping(state_.booked, config_);
  reward += trace_.bumping.cost;
  trace_.events.push_back({0.0, EventKind::kDepart, 0, std::nullopt,
                           trace_.bumping.cost, state_.booked});
  StepOutcome out;
  out.reward = reward;
  out.cancellations = std::move(counts);
  out.bumping = trace_.bumping;
  trace_.outcomes.push_back(out);
  terminal_ = true;
  return out;
}

StepOutcome BookingEnvironment::step(Action action) {
  if (terminal_) throw std::logic_error("step called on a terminal episode");

  const PassengerRecord& p = passengers_[next_passenger_];
  const auto idx = static_cast<std::size_t>(p.class_id - 1);
  double reward = 0.0;
  ++trace_.arrivals;
  if (action == Action::kAccept) {
    reward = config_.fares[idx];
    ++state_.booked[idx];
    ++trace_.accepted;
    if (p.cancel_time) {
      pending_.push_back({*p.cancel_time, p.class_id, seq_++});
      std::push_heap(pending_.begin(), pending_.end(), LaterCancel{});
    }
  }
  trace_.events.push_back({p.arrival_time, EventKind::kArrive, p.class_id,
                           action, reward, state_.booked});

  ++next_passenger_;
  std::vector<int> counts(state_.booked.size(), 0);
  if (next_passenger_ == passengers_.size()) return depart(reward, std::move(counts));

  const PassengerRecord& next = passengers_[next_passenger_];
  reward += process_cancellations(next.arrival_time, counts);
  state_.latest_class = next.class_id;
  state_.time_remaining = next.arrival_time;

  StepOutcome out;
  out.reward = reward;
  out.next_state = state_;
  out.cancellations = std::move(counts);
  trace_.outcomes.push_back(out);
  return out;
}

double episode_revenue(std::span<const StepOutcome> outcomes) {
  if (outcomes.empty() || !outcomes.back().terminal())
    throw std::invalid_argument("episode trace is incomplete");
  double total = 0.0;
  for (const auto& o : outcomes) total += o.reward;
  return total;
}

Features encode_state(const BookingState& state, const MarketConfig& config) {
  if (config.num_classes() != 3 || state.booked.size() != 3)
    throw std::invalid_argument(
        "state encoder supports exactly three fare classes");
  const double cap = config.capacity;
  return {static_cast<double>(state.latest_class) / 3.0,
          state.booked[0] / cap,
          state.booked[1] / cap,
          state.booked[2] / cap,
          state.time_remaining / config.horizon,
          1.0};
}

namespace {

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::kArrive: return "arrive";
    case EventKind::kCancel: return "cancel";
    case EventKind::kDepart: return "depart";
  }
  return "?";
}

}  // namespace

void write_trace(std::ostream& out, const EpisodeTrace& trace) {
  for (const auto& e : trace.events) {
    out << "t=" << format_double(e.time) << " event=" << event_name(e.kind)
        << " class=" << e.class_id << " action="
        << (e.action ? (*e.action == Action::kAccept ? "accept" : "deny") : "-")
        << " reward=" << format_double(e.reward) << " booked=";
    for (std::size_t i = 0; i < e.booked.size(); ++i)
      out << (i ? "," : "") << e.booked[i];
    out << '\n';
  }
}

}  // namespace seatq
