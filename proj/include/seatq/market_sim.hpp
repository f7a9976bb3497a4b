#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seatq/rng.hpp"

namespace seatq {

// Market for a single flight. Class index 1 is the highest fare; vectors are
// stored zero-based, so fares[0] is class 1.
struct MarketConfig {
  int capacity = 80;
  double horizon = 1000.0;
  std::vector<double> fares{300.0, 200.0, 100.0};
  std::vector<double> class_means{33.0, 33.0, 34.0};
  double cancel_rate = 0.10;
  std::vector<double> bump_factors{2.0, 2.0, 2.0};

  int num_classes() const { return static_cast<int>(fares.size()); }
  double total_mean() const;

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

struct PassengerRecord {
  int class_id = 1;           // 1..n
  double arrival_time = 0.0;  // days remaining at booking
  std::optional<double> cancel_time;  // days remaining at cancellation

  bool will_cancel() const { return cancel_time.has_value(); }

  friend bool operator==(const PassengerRecord&,
                         const PassengerRecord&) = default;
};

struct EpisodeScript {
  std::vector<PassengerRecord> passengers;  // days remaining non-increasing
  std::uint64_t seed = 0;

  friend bool operator==(const EpisodeScript&, const EpisodeScript&) = default;
};

// Arrival times (days remaining, in the order they occur) of a Poisson
// process with the given expected count over the horizon. Gaps are
// exponential with mean horizon / mean_count on the elapsed-time axis;
// sampling stops at the first cumulative elapsed time >= horizon.
std::vector<double> sample_arrival_times(double mean_count, double horizon,
                                         Engine& rng);

struct CancellationDraw {
  bool will_cancel = false;
  std::optional<double> cancel_time;
};

// One uniform draw for the flag; a second, only when cancelling, for the
// time, which is uniform on the open interval (0, arrival_time).
CancellationDraw assign_cancellation(double arrival_time, double cancel_rate,
                                     Engine& rng);

// Seed of the substream used for class `class_id` of the script with `seed`.
std::uint64_t class_stream_seed(std::uint64_t seed, int class_id);

// Draw order, per class c = 1..n on Engine(class_stream_seed(seed, c)):
// all inter-arrival gaps first, then for each of that class's passengers in
// arrival order the cancel flag and (if set) the cancel time. Classes are
// then merged by days remaining descending, ties broken by class ascending
// and then draw order.
EpisodeScript generate_script(const MarketConfig& config, std::uint64_t seed);

// Debug text format:
//   script seed=<u64> n=<count>
//   class=<int> arrive=<decimal> cancel=<decimal|none>
void write_script(std::ostream& out, const EpisodeScript& script);
EpisodeScript read_script(std::istream& in);

}  // namespace seatq
