#include "seatq/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "seatq/numeric_text.hpp"

namespace seatq {

double MarketConfig::total_mean() const {
  return std::accumulate(class_means.begin(), class_means.end(), 0.0);
}

void MarketConfig::validate() const {
  const auto n = fares.size();
  if (n < 1) throw std::invalid_argument("at least one fare class required");
  if (class_means.size() != n)
    throw std::invalid_argument("class_means must have one entry per fare");
  if (bump_factors.size() != n)
    throw std::invalid_argument("bump_factors must have one entry per fare");
  if (capacity < 1) throw std::invalid_argument("capacity must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("horizon must be positive");
  if (!(cancel_rate >= 0.0 && cancel_rate <= 1.0))
    throw std::invalid_argument("cancel_rate must lie in [0, 1]");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(fares[i] > 0.0) || !std::isfinite(fares[i]))
      throw std::invalid_argument("fares must be positive");
    if (i > 0 && !(fares[i] < fares[i - 1]))
      throw std::invalid_argument(
          "fares must strictly decrease from class 1 to class n");
    if (!(class_means[i] >= 0.0) || !std::isfinite(class_means[i]))
      throw std::invalid_argument("class_means must be non-negative");
    if (!(bump_factors[i] >= 0.0) || !std::isfinite(bump_factors[i]))
      throw std::invalid_argument("bump_factors must be non-negative");
  }
}

std::vector<double> sample_arrival_times(double mean_count, double horizon,
                                         Engine& rng) {
  std::vector<double> times;
  if (!(mean_count > 0.0) || !(horizon > 0.0)) return times;
  const double gap_mean = horizon / mean_count;
  double elapsed = 0.0;
  while (true) {
    elapsed += exponential(rng, gap_mean);
    if (elapsed >= horizon) break;
    times.push_back(horizon - elapsed);
  }
  return times;
}

CancellationDraw assign_cancellation(double arrival_time, double cancel_rate,
                                     Engine& rng) {
  CancellationDraw draw;
  if (!bernoulli(rng, cancel_rate)) return draw;
  draw.will_cancel = true;
  double t = uniform_open_unit(rng) * arrival_time;
  // Rounding can land on an endpoint for extreme arrival times.
  if (t >= arrival_time) t = std::nextafter(arrival_time, 0.0);
  if (t <= 0.0) t = std::nextafter(0.0, arrival_time);
  draw.cancel_time = t;
  return draw;
}

std::uint64_t class_stream_seed(std::uint64_t seed, int class_id) {
  return derive_seed(seed, 0x636c617373ULL /* "class" */,
                     static_cast<std::uint64_t>(class_id));
}

EpisodeScript generate_script(const MarketConfig& config, std::uint64_t seed) {
  EpisodeScript script;
  script.seed = seed;
  for (int c = 1; c <= config.num_classes(); ++c) {
    Engine rng(class_stream_seed(seed, c));
    const auto times = sample_arrival_times(
        config.class_means[static_cast<std::size_t>(c - 1)], config.horizon,
        rng);
    for (double t : times) {
      PassengerRecord p;
      p.class_id = c;
      p.arrival_time = t;
      p.cancel_time = assign_cancellation(t, config.cancel_rate, rng).cancel_time;
      script.passengers.push_back(p);
    }
  }
  // Within a class the draws are already in chronological order, so a stable
  // sort on (time desc, class asc) preserves draw order for exact ties.
  std::stable_sort(script.passengers.begin(), script.passengers.end(),
                   [](const PassengerRecord& a, const PassengerRecord& b) {
                     if (a.arrival_time != b.arrival_time)
                       return a.arrival_time > b.arrival_time;
                     return a.class_id < b.class_id;
                   });
  return script;
}

void write_script(std::ostream& out, const EpisodeScript& script) {
  out << "script seed=" << script.seed << " n=" << script.passengers.size()
      << '\n';
  for (const auto& p : script.passengers) {
    out << "class=" << p.class_id << " arrive=" << format_double(p.arrival_time)
        << " cancel="
        << (p.cancel_time ? format_double(*p.cancel_time) : std::string("none"))
        << '\n';
  }
}

namespace {

std::string_view field_value(std::string_view token, std::string_view key) {
  if (token.size() <= key.size() + 1 || token.substr(0, key.size()) != key ||
      token[key.size()] != '=') {
    throw std::invalid_argument("expected field '" + std::string(key) +
                                "', got '" + std::string(token) + "'");
  }
  return token.substr(key.size() + 1);
}

std::vector<std::string_view> tokens_of(const std::string& line) {
  std::vector<std::string_view> out;
  for (auto tok : split(line, ' '))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

}  // namespace

EpisodeScript read_script(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty script");
  auto head = tokens_of(line);
  if (head.size() != 3 || head[0] != "script")
    throw std::invalid_argument("bad script header: " + line);
  EpisodeScript script;
  script.seed = parse_u64(field_value(head[1], "seed"));
  const auto count = parse_u64(field_value(head[2], "n"));
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw std::invalid_argument("script truncated after " +
                                  std::to_string(i) + " passengers");
    auto tok = tokens_of(line);
    if (tok.size() != 3) throw std::invalid_argument("bad passenger: " + line);
    PassengerRecord p;
    p.class_id = static_cast<int>(parse_int(field_value(tok[0], "class")));
    p.arrival_time = parse_double(field_value(tok[1], "arrive"));
    const auto cancel = field_value(tok[2], "cancel");
    if (cancel != "none") p.cancel_time = parse_double(cancel);
    script.passengers.push_back(p);
  }
  return script;
}

}  // namespace seatq
