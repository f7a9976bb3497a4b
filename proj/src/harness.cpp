#include "seatq/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "seatq/numeric_text.hpp"

namespace seatq {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  market.validate();
  agent.validate();
  if (eval_episodes < 0) throw ConfigError(0, "eval_episodes must be >= 0");
  if (moving_window < 1) throw ConfigError(0, "moving_window must be >= 1");
  for (const auto& [id, means] : distributions)
    if (means.size() != market.fares.size())
      throw ConfigError(0, "distribution_" + std::to_string(id) +
                               " needs one mean per fare class");
  for (double r : grid_cancel_rates)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(0, "grid_cancel_rates must lie in [0, 1]");
  const std::set<fs::path> unique{weights_path, train_csv, eval_csv, summary_csv};
  if (unique.size() != 4) throw ConfigError(0, "output paths must be distinct");
}

void RunConfig::place_outputs(const fs::path& dir) {
  for (fs::path* p : {&weights_path, &train_csv, &eval_csv, &summary_csv})
    if (p->is_relative()) *p = dir / *p;
}

namespace {

std::vector<double> parse_list(std::string_view value) {
  std::vector<double> out;
  for (auto tok : split(value, ',')) out.push_back(parse_double(trim(tok)));
  return out;
}

long parse_count(std::string_view value, const char* key) {
  const long long v = parse_int(value);
  if (v < 0) throw std::invalid_argument(std::string(key) + " must be >= 0");
  return static_cast<long>(v);
}

double parse_probability(std::string_view value, const char* key) {
  const double v = parse_double(value);
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(key) + " must lie in [0, 1]");
  return v;
}

double parse_positive(std::string_view value, const char* key) {
  const double v = parse_double(value);
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(key) + " must be positive");
  return v;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  bool means_set = false;
  bool distribution_set = false;
  std::optional<std::vector<double>> beta;
  int beta_line = 0;

  using Setter = std::function<void(std::string_view)>;
  const std::map<std::string, Setter, std::less<>> setters{
      {"capacity", [&](auto v) {
         const long long c = parse_int(v);
         if (c < 1) throw std::invalid_argument("capacity must be >= 1");
         cfg.market.capacity = static_cast<int>(c);
       }},
      {"horizon", [&](auto v) { cfg.market.horizon = parse_positive(v, "horizon"); }},
      {"fares", [&](auto v) {
         auto f = parse_list(v);
         for (std::size_t i = 0; i < f.size(); ++i) {
           if (!(f[i] > 0.0)) throw std::invalid_argument("fares must be positive");
           if (i > 0 && !(f[i] < f[i - 1]))
             throw std::invalid_argument("fares must strictly decrease from class 1 to class n");
         }
         cfg.market.fares = std::move(f);
       }},
      {"class_means", [&](auto v) {
         auto m = parse_list(v);
         for (double x : m)
           if (!(x >= 0.0)) throw std::invalid_argument("class_means must be non-negative");
         cfg.market.class_means = std::move(m);
         means_set = true;
       }},
      {"cancel_rate", [&](auto v) { cfg.market.cancel_rate = parse_probability(v, "cancel_rate"); }},
      {"beta", [&](auto v) {
         auto b = parse_list(v);
         for (double x : b)
           if (!(x >= 0.0)) throw std::invalid_argument("beta must be non-negative");
         beta = std::move(b);
       }},
      {"gamma", [&](auto v) {
         const double g = parse_double(v);
         if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
         cfg.agent.gamma = g;
       }},
      {"buffer_capacity", [&](auto v) {
         cfg.agent.buffer_capacity = static_cast<std::size_t>(parse_positive(v, "buffer_capacity"));
       }},
      {"batch_size", [&](auto v) {
         cfg.agent.batch_size = static_cast<std::size_t>(parse_positive(v, "batch_size"));
       }},
      {"warmup_steps", [&](auto v) { cfg.agent.warmup_steps = parse_count(v, "warmup_steps"); }},
      {"target_sync_interval", [&](auto v) {
         cfg.agent.target_sync_interval = static_cast<long>(parse_positive(v, "target_sync_interval"));
       }},
      {"eps_start", [&](auto v) { cfg.agent.eps_start = parse_probability(v, "eps_start"); }},
      {"eps_end", [&](auto v) { cfg.agent.eps_end = parse_probability(v, "eps_end"); }},
      {"eps_anneal_fraction", [&](auto v) {
         cfg.agent.eps_anneal_fraction = parse_positive(v, "eps_anneal_fraction");
       }},
      {"base_rate", [&](auto v) { cfg.agent.base_rate = parse_positive(v, "base_rate"); }},
      {"rms_decay", [&](auto v) {
         const double d = parse_double(v);
         if (!(d >= 0.0 && d < 1.0)) throw std::invalid_argument("rms_decay must lie in [0, 1)");
         cfg.agent.rms.decay = d;
       }},
      {"rms_epsilon", [&](auto v) { cfg.agent.rms.epsilon = parse_positive(v, "rms_epsilon"); }},
      {"reward_scale", [&](auto v) { cfg.agent.reward_scale = parse_positive(v, "reward_scale"); }},
      {"train_episodes", [&](auto v) { cfg.agent.train_episodes = parse_count(v, "train_episodes"); }},
      {"eval_episodes", [&](auto v) { cfg.eval_episodes = parse_count(v, "eval_episodes"); }},
      {"seed", [&](auto v) { cfg.seed = parse_u64(v); }},
      {"moving_window", [&](auto v) {
         cfg.moving_window = static_cast<int>(parse_positive(v, "moving_window"));
       }},
      {"class_distribution", [&](auto v) {
         cfg.class_distribution = static_cast<int>(parse_int(v));
         distribution_set = true;
       }},
      {"distribution_1", [&](auto v) { cfg.distributions[1] = parse_list(v); }},
      {"distribution_2", [&](auto v) { cfg.distributions[2] = parse_list(v); }},
      {"distribution_3", [&](auto v) { cfg.distributions[3] = parse_list(v); }},
      {"grid_cancel_rates", [&](auto v) { cfg.grid_cancel_rates = parse_list(v); }},
      {"weights", [&](auto v) { cfg.weights_path = std::string(v); }},
      {"train_csv", [&](auto v) { cfg.train_csv = std::string(v); }},
      {"eval_csv", [&](auto v) { cfg.eval_csv = std::string(v); }},
      {"summary_csv", [&](auto v) { cfg.summary_csv = std::string(v); }},
  };

  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    try {
      it->second(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, std::string(key) + ": " + e.what());
    }
    if (key == "beta") beta_line = line_no;
  }

  if (distribution_set && !means_set) {
    const auto it = cfg.distributions.find(cfg.class_distribution);
    if (it == cfg.distributions.end())
      throw ConfigError(0, "class_distribution " + std::to_string(cfg.class_distribution) +
                               " has no distribution_<id> entry");
    cfg.market.class_means = it->second;
  }
  const auto n = cfg.market.fares.size();
  if (beta) {
    if (beta->size() == 1) beta->assign(n, beta->front());
    if (beta->size() != n)
      throw ConfigError(beta_line, "beta needs one value or one per fare class");
    cfg.market.bump_factors = *beta;
  } else if (cfg.market.bump_factors.size() != n) {
    cfg.market.bump_factors.assign(n, cfg.market.bump_factors.front());
  }
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<EpisodeMetrics>& metrics) {
  auto out = open_output(path);
  write_metrics_csv_header(out);
  for (std::size_t i = 0; i < metrics.size(); ++i) write_metrics_csv_row(out, i, metrics[i]);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string percent(double x) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(3);
  ss << x;
  return ss.str();
}

SummaryRow summarize(const std::vector<EpisodeMetrics>& metrics, double cancel_rate,
                     int distribution, int window) {
  SummaryRow row = aggregate(metrics, window).summary;
  row.cancel_rate = cancel_rate;
  row.class_distribution = distribution;
  return row;
}

}  // namespace

int run_train(const RunConfig& config, std::ostream& log) {
  try {
    config.validate();
    const long every = std::max(1L, config.agent.train_episodes / 20);
    auto result = train(config.market, config.agent, config.seed,
                        [&](std::size_t i, const EpisodeMetrics& m) {
                          if ((static_cast<long>(i) + 1) % every == 0)
                            log << "episode " << i + 1 << " pct_optimal "
                                << (m.pct_optimal ? percent(*m.pct_optimal) : "n/a")
                                << " epsilon " << percent(m.epsilon) << '\n';
                        });
    write_metrics_csv(config.train_csv, result.metrics);
    {
      auto out = open_output(config.weights_path);
      save_weights(result.net, out);
      if (!out) throw std::runtime_error("write failed for " + config.weights_path.string());
    }
    if (!result.metrics.empty()) {
      const auto agg = aggregate(result.metrics, config.moving_window);
      log << "final moving averages (window " << config.moving_window << "): pct_optimal "
          << percent(agg.moving_average.pct_optimal.back()) << " acceptance_rate "
          << percent(agg.moving_average.acceptance_rate.back()) << " load_factor "
          << percent(agg.moving_average.load_factor.back()) << '\n';
    }
    log << "wrote " << config.train_csv.string() << " and " << config.weights_path.string()
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    log << "train failed: " << e.what() << '\n';
    return 1;
  }
}

int run_eval(const RunConfig& config, const fs::path& weights, std::ostream& log) {
  try {
    config.validate();
    if (config.eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
    std::ifstream in(weights, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read weights " + weights.string());
    QNetwork net = load_weights(in);
    const auto metrics =
        evaluate(greedy_policy(std::move(net)), config.market, config.eval_episodes, config.seed);
    write_metrics_csv(config.eval_csv, metrics);
    const SummaryRow row = summarize(metrics, config.market.cancel_rate,
                                     config.class_distribution, config.moving_window);
    auto out = open_output(config.summary_csv);
    write_summary_csv_header(out);
    write_summary_csv_row(out, row);
    double revenue = 0.0;
    for (const auto& m : metrics) revenue += m.revenue;
    log << "eval " << row.episodes << " episodes: mean revenue "
        << percent(revenue / static_cast<double>(metrics.size())) << " pct_optimal "
        << percent(row.avg_pct_optimal) << " acceptance_rate "
        << percent(row.avg_acceptance_rate) << " load_factor " << percent(row.avg_load_factor)
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    log << "eval failed: " << e.what() << '\n';
    return 1;
  }
}

int run_grid(const RunConfig& config, std::ostream& log) {
  std::vector<SummaryRow> rows;
  std::uint64_t cell = 0;
  try {
    config.validate();
    if (config.eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  } catch (const std::exception& e) {
    log << "grid failed: " << e.what() << '\n';
    return 1;
  }
  for (double rate : config.grid_cancel_rates) {
    for (const auto& [id, means] : config.distributions) {
      try {
        MarketConfig market = config.market;
        market.cancel_rate = rate;
        market.class_means = means;
        const std::uint64_t seed = derive_seed(config.seed, 0x67726964 /* "grid" */, cell);
        auto trained = train(market, config.agent, seed);
        const auto metrics =
            evaluate(greedy_policy(std::move(trained.net)), market, config.eval_episodes, seed);
        rows.push_back(summarize(metrics, rate, id, config.moving_window));
        log << "cell cancel_rate=" << format_double(rate) << " distribution=" << id
            << " pct_optimal " << percent(rows.back().avg_pct_optimal) << '\n';
      } catch (const std::exception& e) {
        log << "grid cell cancel_rate=" << format_double(rate) << " distribution=" << id
            << " failed: " << e.what() << '\n';
        return 1;
      }
      ++cell;
    }
  }
  try {
    auto out = open_output(config.summary_csv);
    write_summary_csv_header(out);
    for (const auto& r : rows) write_summary_csv_row(out, r);
    if (!out) throw std::runtime_error("write failed for " + config.summary_csv.string());
  } catch (const std::exception& e) {
    log << "grid failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_oracle(const RunConfig& config, long scripts, std::ostream& out) {
  config.validate();
  out << "script,seed,arrivals,oracle_revenue";
  for (int c = 1; c <= config.market.num_classes(); ++c) out << ",alloc_c" << c;
  out << '\n';
  for (long i = 0; i < scripts; ++i) {
    const std::uint64_t seed =
        phase_seed(config.seed, SeedPhase::kEvalScript, static_cast<std::uint64_t>(i));
    const auto script = generate_script(config.market, seed);
    const auto h = hindsight_optimal(script, config.market);
    out << i << ',' << seed << ',' << script.passengers.size() << ','
        << format_double(h.revenue);
    for (int a : h.allocation) out << ',' << a;
    out << '\n';
  }
  return 0;
}

CheckResult check_gradients(std::uint64_t seed, GradientFault fault) {
  const auto start = std::chrono::steady_clock::now();
  const auto r = gradient_check(seed, fault);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CheckResult out{"gradcheck", r.max_relative_error < 1e-4 && r.parameters_checked >= 1000, ""};
  std::ostringstream ss;
  ss << "max relative error " << r.max_relative_error << " over " << r.parameters_checked
     << " parameters in " << secs << " s";
  out.detail = ss.str();
  return out;
}

CheckResult check_simulator(std::uint64_t seed) {
  constexpr int kScripts = 10'000;
  MarketConfig market;
  market.class_means = {33.0, 33.0, 34.0};
  CheckResult out{"simulator", true, ""};
  std::ostringstream ss;
  std::uint64_t stream = 0;
  for (double rate : {0.0, 0.10, 0.20}) {
    market.cancel_rate = rate;
    std::vector<double> counts(3, 0.0);
    double passengers = 0.0, cancels = 0.0;
    for (int i = 0; i < kScripts; ++i) {
      const auto script = generate_script(market, derive_seed(seed, 0x73696d /* "sim" */, stream++));
      for (const auto& p : script.passengers) {
        counts[static_cast<std::size_t>(p.class_id - 1)] += 1.0;
        cancels += p.will_cancel() ? 1.0 : 0.0;
      }
      passengers += static_cast<double>(script.passengers.size());
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const double mean = counts[c] / kScripts;
      const double rel = std::abs(mean - market.class_means[c]) / market.class_means[c];
      if (!(rel <= 0.01)) out.passed = false;
      ss << "rate " << rate << " class " << c + 1 << " mean " << mean << "; ";
    }
    const double frac = cancels / passengers;
    const double se = std::sqrt(rate * (1.0 - rate) / passengers);
    if (!(std::abs(frac - rate) <= 3.0 * se)) out.passed = false;
    ss << "cancel fraction " << frac << " (3se " << 3.0 * se << "); ";
  }
  out.detail = ss.str();
  out.detail.resize(out.detail.size() - 2);  // trailing "; "
  return out;
}

CheckResult check_hindsight_bound(std::uint64_t seed) {
  constexpr int kScripts = 1'000;
  MarketConfig market;  // beta = 2 for every class
  BookingEnvironment env(market);
  const QNetwork random_net = init_network(derive_seed(seed, 0x6e6574 /* "net" */));
  const std::vector<std::pair<std::string, Policy>> policies{
      {"deny-all", baseline_policy(BaselineKind::kDenyAll)},
      {"accept-all", baseline_policy(BaselineKind::kAcceptAll)},
      {"random(0.5)", baseline_policy(BaselineKind::kRandom, 0.5, derive_seed(seed, 0x726e64))},
      {"greedy-random-net", greedy_policy(random_net)},
  };
  long cases = 0, held = 0;
  for (int i = 0; i < kScripts; ++i) {
    const auto script = generate_script(market, derive_seed(seed, 0x626e64 /* "bnd" */, static_cast<std::uint64_t>(i)));
    for (const auto& [name, policy] : policies) {
      const auto trace = run_episode(env, script, policy);
      ++cases;
      if (hindsight_bound_check(script, trace, market)) ++held;
    }
  }
  std::ostringstream ss;
  ss << held << " of " << cases << " (script, policy) cases within the hindsight bound";
  return {"hindsight-bound", held == cases, ss.str()};
}

TinyMdpSpec reference_tiny_spec() {
  return TinyMdpSpec::uniform(4, 2, {300.0, 200.0}, {2.0, 2.0}, {0.3, 0.5}, 0.10);
}

AgentConfig tiny_agent_config() {
  AgentConfig a;
  a.gamma = 1.0;
  a.buffer_capacity = 20'000;
  a.batch_size = 32;
  a.warmup_steps = 500;
  a.target_sync_interval = 200;
  a.eps_start = 1.0;
  a.eps_end = 0.1;
  a.eps_anneal_fraction = 0.5;
  a.base_rate = 1e-3;
  a.reward_scale = 1.0 / 300.0;
  return a;
}

CheckResult check_tiny_dp(std::uint64_t seed) {
  const TinyMdpSpec spec = reference_tiny_spec();
  const auto dp = exact_dp_value(spec);
  const QNetwork net = train_tiny(spec, tiny_agent_config(), kTinyTrainEpisodes, seed);
  const double estimate = estimate_tiny_greedy_value(spec, net, kTinyEvalEpisodes, seed);
  const double exact_greedy = evaluate_tiny_policy(spec, tiny_greedy_table(spec, net));
  const double gap = std::abs(estimate - dp.value) / std::abs(dp.value);
  std::ostringstream ss;
  ss << "dp value " << dp.value << ", greedy estimate " << estimate << " (exact "
     << exact_greedy << "), relative gap " << gap;
  return {"tiny-dp", gap <= 0.02, ss.str()};
}

std::vector<CheckResult> run_checks(const CheckOptions& options, std::ostream& log) {
  if (options.only) {
    bool known = false;
    for (const auto& n : kCheckNames) known = known || n == *options.only;
    if (!known) throw std::invalid_argument("unknown check '" + *options.only + "'");
  }
  const auto wanted = [&](const std::string& name) {
    return !options.only || *options.only == name;
  };
  std::vector<CheckResult> results;
  const auto record = [&](CheckResult r) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << std::endl;
    results.push_back(std::move(r));
  };
  if (wanted("gradcheck")) record(check_gradients(options.seed, options.gradient_fault));
  if (wanted("simulator")) record(check_simulator(options.seed));
  if (wanted("hindsight-bound")) record(check_hindsight_bound(options.seed));
  if (wanted("tiny-dp")) record(check_tiny_dp(options.seed));
  return results;
}

int run_checks_command(const CheckOptions& options, std::ostream& log) {
  try {
    const auto results = run_checks(options, log);
    for (const auto& r : results)
      if (!r.passed) return 1;
    return 0;
  } catch (const std::exception& e) {
    log << "checks failed: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace seatq
