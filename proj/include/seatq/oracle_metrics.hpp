#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "seatq/environment.hpp"
#include "seatq/market_sim.hpp"

namespace seatq {

struct HindsightResult {
  double revenue = 0.0;
  std::vector<int> allocation;  // accepted per class
};

// Best revenue with perfect foresight. Passengers who will cancel net zero
// under full refunds, so only the others are considered; they are taken in
// fare order until the cabin is full.
HindsightResult hindsight_optimal(const EpisodeScript& script,
                                  const MarketConfig& config);

struct EpisodeMetrics {
  double revenue = 0.0;
  double oracle_revenue = 0.0;
  // Empty when the oracle is zero but revenue is not (excluded from means).
  std::optional<double> pct_optimal;
  int arrivals = 0;
  int accepted = 0;
  double acceptance_rate = 0.0;  // percent; 0 when there were no requests
  double load_factor = 0.0;      // percent, pre-bumping booked at departure
  std::vector<int> booked_per_class;
  int bumped_total = 0;
  double epsilon = 0.0;  // exploration rate at episode end (training only)
};

EpisodeMetrics episode_metrics(const EpisodeTrace& trace, double oracle_revenue,
                               const MarketConfig& config);

struct SummaryRow {
  double cancel_rate = 0.0;
  int class_distribution = 0;
  double avg_pct_optimal = 0.0;
  double avg_acceptance_rate = 0.0;
  double avg_load_factor = 0.0;
  std::size_t episodes = 0;
};

struct MetricSeries {
  std::vector<double> pct_optimal;
  std::vector<double> acceptance_rate;
  std::vector<double> load_factor;
};

struct Aggregate {
  SummaryRow summary;  // cancel_rate and class_distribution left for the caller
  MetricSeries moving_average;
  std::size_t excluded = 0;  // episodes without a defined pct_optimal
};

inline constexpr int kDefaultMovingWindow = 100;

// Means over all episodes and trailing moving averages (window may exceed
// the series length; early points average what is available). Throws on an
// empty list or window < 1.
Aggregate aggregate(std::span<const EpisodeMetrics> metrics,
                    int window = kDefaultMovingWindow);

// revenue(trace) <= hindsight_optimal(script). Requires every bump factor
// >= 1; throws std::invalid_argument otherwise.
bool hindsight_bound_check(const EpisodeScript& script, const EpisodeTrace& trace,
                           const MarketConfig& config);

// CSV writers. Numbers use shortest round-trip formatting.
void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_row(std::ostream& out, std::size_t episode,
                           const EpisodeMetrics& m);
void write_summary_csv_header(std::ostream& out);
void write_summary_csv_row(std::ostream& out, const SummaryRow& row);

}  // namespace seatq
