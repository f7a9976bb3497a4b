#include "seatq/oracle_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "seatq/numeric_text.hpp"

namespace seatq {

HindsightResult hindsight_optimal(const EpisodeScript& script,
                                  const MarketConfig& config) {
  const auto n = static_cast<std::size_t>(config.num_classes());
  std::vector<int> stayers(n, 0);
  for (const auto& p : script.passengers)
    if (!p.will_cancel()) ++stayers.at(static_cast<std::size_t>(p.class_id - 1));

  // Fares strictly decrease with class index, so class order is fare order.
  HindsightResult out;
  out.allocation.assign(n, 0);
  int seats = config.capacity;
  for (std::size_t c = 0; c < n && seats > 0; ++c) {
    const int take = std::min(stayers[c], seats);
    out.allocation[c] = take;
    out.revenue += take * config.fares[c];
    seats -= take;
  }
  return out;
}

EpisodeMetrics episode_metrics(const EpisodeTrace& trace, double oracle_revenue,
                               const MarketConfig& config) {
  if (!trace.complete()) throw std::invalid_argument("episode trace is incomplete");
  if (oracle_revenue < 0.0) throw std::invalid_argument("oracle revenue is negative");
  EpisodeMetrics m;
  m.revenue = episode_revenue(trace.outcomes);
  m.oracle_revenue = oracle_revenue;
  if (oracle_revenue > 0.0) {
    m.pct_optimal = 100.0 * m.revenue / oracle_revenue;
  } else if (m.revenue == 0.0) {
    m.pct_optimal = 100.0;
  }
  m.arrivals = trace.arrivals;
  m.accepted = trace.accepted;
  m.acceptance_rate =
      trace.arrivals > 0 ? 100.0 * trace.accepted / trace.arrivals : 0.0;
  m.booked_per_class = trace.booked_at_departure;
  const int booked = std::accumulate(m.booked_per_class.begin(),
                                     m.booked_per_class.end(), 0);
  m.load_factor = 100.0 * booked / config.capacity;
  m.bumped_total = trace.bumping.total();
  return m;
}

namespace {

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nan("");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

Aggregate aggregate(std::span<const EpisodeMetrics> metrics, int window) {
  if (metrics.empty()) throw std::invalid_argument("cannot aggregate zero episodes");
  if (window < 1) throw std::invalid_argument("moving-average window must be >= 1");

  Aggregate out;
  std::vector<double> pct, acc, load;
  for (const auto& m : metrics) {
    if (m.pct_optimal) pct.push_back(*m.pct_optimal);
    acc.push_back(m.acceptance_rate);
    load.push_back(m.load_factor);
  }
  out.excluded = metrics.size() - pct.size();
  if (out.excluded > 0)
    std::cerr << "warning: " << out.excluded
              << " episode(s) with zero oracle revenue and nonzero revenue "
                 "excluded from pct_optimal\n";
  out.summary.avg_pct_optimal = mean_of(pct);
  out.summary.avg_acceptance_rate = mean_of(acc);
  out.summary.avg_load_factor = mean_of(load);
  out.summary.episodes = metrics.size();

  const auto w = static_cast<std::size_t>(window);
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const std::size_t lo = i + 1 >= w ? i + 1 - w : 0;
    double sp = 0.0, sa = 0.0, sl = 0.0;
    std::size_t np = 0;
    for (std::size_t j = lo; j <= i; ++j) {
      if (metrics[j].pct_optimal) {
        sp += *metrics[j].pct_optimal;
        ++np;
      }
      sa += metrics[j].acceptance_rate;
      sl += metrics[j].load_factor;
    }
    const auto len = static_cast<double>(i - lo + 1);
    out.moving_average.pct_optimal.push_back(np ? sp / static_cast<double>(np)
                                                : std::nan(""));
    out.moving_average.acceptance_rate.push_back(sa / len);
    out.moving_average.load_factor.push_back(sl / len);
  }
  return out;
}

bool hindsight_bound_check(const EpisodeScript& script, const EpisodeTrace& trace,
                           const MarketConfig& config) {
  for (double beta : config.bump_factors)
    if (beta < 1.0)
      throw std::invalid_argument("hindsight bound requires every bump factor >= 1");
  return episode_revenue(trace.outcomes) <= hindsight_optimal(script, config).revenue;
}

void write_metrics_csv_header(std::ostream& out) {
  out << "episode,revenue,oracle_revenue,pct_optimal,arrivals,accepted,"
         "acceptance_rate,load_factor,booked_c1,booked_c2,booked_c3,"
         "bumped_total,epsilon\n";
}

void write_metrics_csv_row(std::ostream& out, std::size_t episode,
                           const EpisodeMetrics& m) {
  out << episode << ',' << format_double(m.revenue) << ','
      << format_double(m.oracle_revenue) << ','
      << (m.pct_optimal ? format_double(*m.pct_optimal) : std::string()) << ','
      << m.arrivals << ',' << m.accepted << ',' << format_double(m.acceptance_rate)
      << ',' << format_double(m.load_factor);
  for (std::size_t c = 0; c < 3; ++c)
    out << ',' << (c < m.booked_per_class.size() ? m.booked_per_class[c] : 0);
  out << ',' << m.bumped_total << ',' << format_double(m.epsilon) << '\n';
}

void write_summary_csv_header(std::ostream& out) {
  out << "cancel_rate,class_distribution,avg_pct_optimal,avg_acceptance_rate,"
         "avg_load_factor,episodes\n";
}

void write_summary_csv_row(std::ostream& out, const SummaryRow& row) {
  out << format_double(row.cancel_rate) << ',' << row.class_distribution << ','
      << format_double(row.avg_pct_optimal) << ','
      << format_double(row.avg_acceptance_rate) << ','
      << format_double(row.avg_load_factor) << ',' << row.episodes << '\n';
}

}  // namespace seatq
