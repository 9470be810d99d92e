#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nomaq/channel.hpp"
#include "nomaq/decoders.hpp"
#include "nomaq/modulation.hpp"
#include "nomaq/qubo.hpp"
#include "nomaq/signal.hpp"

namespace nomaq {

enum class DecoderKind { bf, sic, qa };

inline std::string_view to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::bf:
      return "bf";
    case DecoderKind::sic:
      return "sic";
    case DecoderKind::qa:
      return "qa";
  }
  throw std::invalid_argument("to_string: unknown decoder kind");
}

inline DecoderKind parse_decoder_kind(std::string_view name) {
  if (name == "bf") return DecoderKind::bf;
  if (name == "sic") return DecoderKind::sic;
  if (name == "qa") return DecoderKind::qa;
  throw std::invalid_argument("unknown decoder: " + std::string(name) +
                              " (expected bf, sic or qa)");
}

struct SimulationConfig {
  int n_users = 3;
  ModKind scheme = ModKind::bpsk;
  std::vector<double> power_dbm_list;
  double noise_dbm = -30.0;
  double tau = 2.0;
  long trials = 1;
  std::uint64_t seed = 1;
  std::vector<DecoderKind> decoders;
  AnnealParams anneal;
  int parallel_width = 5;
};

inline void validate(const SimulationConfig& config) {
  if (config.n_users < 1) {
    throw std::invalid_argument("config: n_users must be >= 1");
  }
  if (config.power_dbm_list.empty()) {
    throw std::invalid_argument("config: power_dbm_list must not be empty");
  }
  if (config.trials < 1) {
    throw std::invalid_argument("config: trials must be >= 1");
  }
  if (config.decoders.empty()) {
    throw std::invalid_argument("config: decoders must not be empty");
  }
  if (config.parallel_width < 1) {
    throw std::invalid_argument("config: parallel_width must be >= 1");
  }
  validate(config.anneal);

  // reject instances a selected decoder cannot take, before any trial runs
  const int qps = ModulationScheme::make(config.scheme).qubits_per_symbol();
  const int m = config.n_users * qps;
  for (const DecoderKind decoder : config.decoders) {
    if (decoder == DecoderKind::bf && m > 24) {
      throw std::invalid_argument(
          "config: instance too large for the bf decoder (over 2^24 candidates)");
    }
    if (decoder == DecoderKind::qa && m > 1024) {
      throw std::invalid_argument(
          "config: instance too large for the qa decoder (dense coupling view)");
    }
  }
}

/// Flat key/value config document. Every SimulationConfig field is spelled
/// out; unknown keys are rejected so typos fail fast.
inline SimulationConfig parse_config(const nlohmann::json& doc) {
  static const char* known[] = {
      "n_users",      "scheme",        "power_dbm_list",
      "noise_dbm",    "tau",           "trials",
      "seed",         "decoders",      "anneal_reads",
      "anneal_sweeps_per_read",        "anneal_beta_min",
      "anneal_beta_max",               "anneal_time_us",
      "parallel_width"};
  if (!doc.is_object()) {
    throw std::runtime_error("config: top level must be an object");
  }
  for (const auto& [key, value] : doc.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || key == name;
    if (!ok) throw std::runtime_error("config: unknown key \"" + key + "\"");
  }
  for (const char* name : {"n_users", "scheme", "power_dbm_list", "noise_dbm",
                           "trials", "seed", "decoders"}) {
    if (!doc.contains(name)) {
      throw std::runtime_error("config: missing required key \"" +
                               std::string(name) + "\"");
    }
  }

  SimulationConfig config;
  config.n_users = doc.at("n_users").get<int>();
  config.scheme = parse_mod_kind(doc.at("scheme").get<std::string>());
  config.power_dbm_list = doc.at("power_dbm_list").get<std::vector<double>>();
  config.noise_dbm = doc.at("noise_dbm").get<double>();
  config.tau = doc.value("tau", 2.0);
  config.trials = doc.at("trials").get<long>();
  config.seed = doc.at("seed").get<std::uint64_t>();
  for (const auto& name : doc.at("decoders")) {
    config.decoders.push_back(parse_decoder_kind(name.get<std::string>()));
  }
  config.anneal.reads = doc.value("anneal_reads", config.anneal.reads);
  config.anneal.sweeps_per_read =
      doc.value("anneal_sweeps_per_read", config.anneal.sweeps_per_read);
  config.anneal.beta_min = doc.value("anneal_beta_min", config.anneal.beta_min);
  config.anneal.beta_max = doc.value("anneal_beta_max", config.anneal.beta_max);
  config.anneal.anneal_time_us =
      doc.value("anneal_time_us", config.anneal.anneal_time_us);
  config.parallel_width = doc.value("parallel_width", config.parallel_width);
  validate(config);
  return config;
}

/// Loads a config file and applies the NOMA_QUBO_THREADS override, if set.
inline SimulationConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  SimulationConfig config = parse_config(doc);
  if (const char* env = std::getenv("NOMA_QUBO_THREADS")) {
    char* end = nullptr;
    const long width = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || width < 1) {
      throw std::runtime_error("NOMA_QUBO_THREADS must be a positive integer");
    }
    config.parallel_width = static_cast<int>(width);
  }
  return config;
}

/// One row of the sweep output: error accounting for a (power, user, decoder)
/// cell plus the mean wall-clock decode time.
struct BerRecord {
  double power_dbm = 0.0;
  int user_index = 0;
  DecoderKind decoder = DecoderKind::bf;
  long trials = 0;
  long bit_errors = 0;
  double ber = 0.0;
  std::int64_t mean_decode_ns = 0;
};

/// Per-decoder phase-time totals over a sweep (nanoseconds).
struct DecoderTiming {
  DecoderKind decoder = DecoderKind::bf;
  std::int64_t build_ns = 0;
  std::int64_t solve_ns = 0;
  std::int64_t readout_ns = 0;
  long decodes = 0;
};

struct SweepResult {
  std::vector<BerRecord> records;
  std::vector<DecoderTiming> timing;
  std::int64_t wall_ns = 0;
};

namespace detail {

// Instance data and the annealer occupy disjoint stream indices so decoders
// never perturb each other's draws.
inline std::uint64_t instance_stream_index(long trial, std::size_t n_powers,
                                           std::size_t power_index) {
  return 2 * (static_cast<std::uint64_t>(trial) * n_powers + power_index);
}

struct TrialOutcome {
  // bit errors keyed by [decoder][user], decode time keyed by [decoder]
  std::vector<std::vector<long>> bit_errors;
  std::vector<PhaseTiming> timing;
};

inline TrialOutcome run_trial(const SimulationConfig& config,
                              const Deployment& deployment,
                              const ModulationScheme& scheme,
                              std::size_t power_index, long trial) {
  const PowerLevel p_tx = PowerLevel::from_dbm(config.power_dbm_list[power_index]);
  const double noise_mw = dbm_to_linear(config.noise_dbm);
  const std::uint64_t base =
      instance_stream_index(trial, config.power_dbm_list.size(), power_index);

  RandomStream instance_stream(config.seed, base);
  const ChannelRealization channel = sample_channel(instance_stream, deployment);
  const std::vector<Complex> sent =
      random_symbols(scheme, config.n_users, instance_stream);
  const Complex noise = sample_circular_gaussian(instance_stream, noise_mw);
  const Complex y = superimpose(sent, channel, p_tx, noise);

  TrialOutcome outcome;
  outcome.bit_errors.resize(config.decoders.size());
  outcome.timing.resize(config.decoders.size());
  for (std::size_t d = 0; d < config.decoders.size(); ++d) {
    DecodeResult decoded;
    switch (config.decoders[d]) {
      case DecoderKind::bf:
        decoded = brute_force_ml(y, channel, p_tx, scheme);
        break;
      case DecoderKind::sic:
        decoded = sic_decode(y, channel, p_tx, scheme);
        break;
      case DecoderKind::qa: {
        RandomStream anneal_stream(config.seed, base + 1);
        decoded = decode_via_annealer(y, channel, p_tx, scheme, config.anneal,
                                      anneal_stream);
        break;
      }
    }
    outcome.timing[d] = decoded.timing;
    outcome.bit_errors[d].resize(config.n_users);
    for (int u = 0; u < config.n_users; ++u) {
      outcome.bit_errors[d][u] = count_bit_errors(
          scheme, std::span(&sent[u], 1), std::span(&decoded.symbols[u], 1));
    }
  }
  return outcome;
}

struct Accumulator {
  // [power][decoder][user] error counts, [power][decoder] time sums
  std::vector<std::vector<std::vector<long>>> errors;
  std::vector<std::vector<std::int64_t>> decode_ns;
  std::vector<PhaseTiming> phase;  // [decoder]
  std::vector<long> decodes;       // [decoder]

  explicit Accumulator(const SimulationConfig& config) {
    const std::size_t n_powers = config.power_dbm_list.size();
    const std::size_t n_dec = config.decoders.size();
    errors.assign(n_powers, std::vector<std::vector<long>>(
                                n_dec, std::vector<long>(config.n_users, 0)));
    decode_ns.assign(n_powers, std::vector<std::int64_t>(n_dec, 0));
    phase.assign(n_dec, PhaseTiming{});
    decodes.assign(n_dec, 0);
  }

  void add(std::size_t power_index, const TrialOutcome& outcome) {
    for (std::size_t d = 0; d < outcome.bit_errors.size(); ++d) {
      for (std::size_t u = 0; u < outcome.bit_errors[d].size(); ++u) {
        errors[power_index][d][u] += outcome.bit_errors[d][u];
      }
      decode_ns[power_index][d] += outcome.timing[d].total_ns();
      phase[d].build_ns += outcome.timing[d].build_ns;
      phase[d].solve_ns += outcome.timing[d].solve_ns;
      phase[d].readout_ns += outcome.timing[d].readout_ns;
      ++decodes[d];
    }
  }

  // Integer sums commute, so merging worker-local accumulators in any order
  // yields identical totals.
  void merge(const Accumulator& other) {
    for (std::size_t p = 0; p < errors.size(); ++p) {
      for (std::size_t d = 0; d < errors[p].size(); ++d) {
        for (std::size_t u = 0; u < errors[p][d].size(); ++u) {
          errors[p][d][u] += other.errors[p][d][u];
        }
        decode_ns[p][d] += other.decode_ns[p][d];
      }
    }
    for (std::size_t d = 0; d < phase.size(); ++d) {
      phase[d].build_ns += other.phase[d].build_ns;
      phase[d].solve_ns += other.phase[d].solve_ns;
      phase[d].readout_ns += other.phase[d].readout_ns;
      decodes[d] += other.decodes[d];
    }
  }
};

}  // namespace detail

/// Monte-Carlo BER sweep over the configured power levels. Every trial
/// derives its streams from (seed, trial, power) alone, every decoder within
/// a trial sees the same channel/symbols/noise, and integer accumulation
/// commutes, so the records are identical for any parallel_width.
inline SweepResult run_ber_sweep(const SimulationConfig& config) {
  validate(config);
  const auto wall0 = std::chrono::steady_clock::now();
  const Deployment deployment = place_users(config.n_users, config.tau);
  const ModulationScheme scheme = ModulationScheme::make(config.scheme);
  const std::size_t n_powers = config.power_dbm_list.size();
  const long total_items = static_cast<long>(n_powers) * config.trials;

  detail::Accumulator totals(config);
  const int width = config.parallel_width;
  if (width == 1) {
    for (long item = 0; item < total_items; ++item) {
      const std::size_t power_index = static_cast<std::size_t>(item) % n_powers;
      const long trial = item / static_cast<long>(n_powers);
      totals.add(power_index,
                 detail::run_trial(config, deployment, scheme, power_index, trial));
    }
  } else {
    std::atomic<long> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<detail::Accumulator> partials(width, detail::Accumulator(config));
    std::vector<std::thread> workers;
    workers.reserve(width);
    for (int w = 0; w < width; ++w) {
      workers.emplace_back([&, w] {
        try {
          while (!failed.load(std::memory_order_relaxed)) {
            const long item = next.fetch_add(1, std::memory_order_relaxed);
            if (item >= total_items) break;
            const std::size_t power_index =
                static_cast<std::size_t>(item) % n_powers;
            const long trial = item / static_cast<long>(n_powers);
            partials[w].add(power_index,
                            detail::run_trial(config, deployment, scheme,
                                              power_index, trial));
          }
        } catch (...) {
          const std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      });
    }
    for (auto& worker : workers) worker.join();
    if (error) std::rethrow_exception(error);
    for (const auto& partial : partials) totals.merge(partial);
  }

  SweepResult result;
  const long bits_per_symbol = scheme.qubits_per_symbol();
  for (std::size_t p = 0; p < n_powers; ++p) {
    for (int u = 0; u < config.n_users; ++u) {
      for (std::size_t d = 0; d < config.decoders.size(); ++d) {
        BerRecord record;
        record.power_dbm = config.power_dbm_list[p];
        record.user_index = u;
        record.decoder = config.decoders[d];
        record.trials = config.trials;
        record.bit_errors = totals.errors[p][d][u];
        record.ber = static_cast<double>(record.bit_errors) /
                     (static_cast<double>(config.trials) * bits_per_symbol);
        record.mean_decode_ns = totals.decode_ns[p][d] / config.trials;
        result.records.push_back(record);
      }
    }
  }
  for (std::size_t d = 0; d < config.decoders.size(); ++d) {
    DecoderTiming timing;
    timing.decoder = config.decoders[d];
    timing.build_ns = totals.phase[d].build_ns;
    timing.solve_ns = totals.phase[d].solve_ns;
    timing.readout_ns = totals.phase[d].readout_ns;
    timing.decodes = totals.decodes[d];
    result.timing.push_back(timing);
  }
  result.wall_ns = detail::elapsed_ns(wall0, std::chrono::steady_clock::now());
  return result;
}

/// Runs several independent experiment instances with up to `width` in
/// flight. Results match a sequential run of each config.
inline std::vector<SweepResult> run_parallel_batch(
    const std::vector<SimulationConfig>& configs, int width) {
  if (width < 1) {
    throw std::invalid_argument("run_parallel_batch: width must be >= 1");
  }
  for (const auto& config : configs) validate(config);
  std::vector<SweepResult> results(configs.size());
  if (width == 1 || configs.size() <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      results[i] = run_ber_sweep(configs[i]);
    }
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const std::size_t pool = std::min<std::size_t>(width, configs.size());
  workers.reserve(pool);
  for (std::size_t w = 0; w < pool; ++w) {
    workers.emplace_back([&] {
      try {
        while (!failed.load(std::memory_order_relaxed)) {
          const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
          if (i >= configs.size()) break;
          results[i] = run_ber_sweep(configs[i]);
        }
      } catch (...) {
        const std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (error) std::rethrow_exception(error);
  return results;
}

/// CSV with the fixed header
/// power_dbm,user_index,decoder,trials,bit_errors,ber,mean_decode_ns.
/// Floats carry 10 significant digits. With include_timing = false the
/// timing column is written as 0, which makes the output reproducible
/// byte for byte across runs and worker counts.
inline std::string to_csv(const std::vector<BerRecord>& records,
                          bool include_timing = true) {
  std::string out = "power_dbm,user_index,decoder,trials,bit_errors,ber,mean_decode_ns\n";
  char line[160];
  for (const BerRecord& record : records) {
    std::snprintf(line, sizeof(line), "%.10g,%d,%s,%ld,%ld,%.10g,%lld\n",
                  record.power_dbm, record.user_index,
                  std::string(to_string(record.decoder)).c_str(), record.trials,
                  record.bit_errors, record.ber,
                  include_timing ? static_cast<long long>(record.mean_decode_ns)
                                 : 0LL);
    out += line;
  }
  return out;
}

/// Mean per-phase durations per decoder. For the annealer the build, anneal
/// and readout columns are the software analogs of the programming, anneal
/// and readout phases of the hardware flow; totals are their sum. Absolute
/// values are informational only and depend on the host.
inline std::string timing_report(const SweepResult& result) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof(line), "%-8s %10s %14s %14s %14s %14s\n", "decoder",
                "decodes", "build_ns", "anneal_ns", "readout_ns", "total_ns");
  out << line;
  for (const DecoderTiming& timing : result.timing) {
    const long n = std::max(timing.decodes, 1L);
    const std::int64_t build = timing.build_ns / n;
    const std::int64_t solve = timing.solve_ns / n;
    const std::int64_t readout = timing.readout_ns / n;
    std::snprintf(line, sizeof(line), "%-8s %10ld %14lld %14lld %14lld %14lld\n",
                  std::string(to_string(timing.decoder)).c_str(), timing.decodes,
                  static_cast<long long>(build), static_cast<long long>(solve),
                  static_cast<long long>(readout),
                  static_cast<long long>(build + solve + readout));
    out << line;
  }
  return out.str();
}

/// Random-instance cross-check of the closed-form coefficient formulas
/// against the generic expansion.
struct VerifyOptions {
  long trials = 1000;
  int max_users = 4;
  std::uint64_t seed = 1;
  double power_dbm_low = -40.0;
  double power_dbm_high = 24.0;
};

struct VerifyOutcome {
  ModKind scheme = ModKind::bpsk;
  double max_deviation = 0.0;
  long trials = 0;
};

inline VerifyOutcome verify_closed_form(ModKind kind, const VerifyOptions& options) {
  if (options.trials < 1 || options.max_users < 1) {
    throw std::invalid_argument("verify: trials and max_users must be >= 1");
  }
  VerifyOutcome outcome;
  outcome.scheme = kind;
  outcome.trials = options.trials;
  const ModulationScheme scheme = ModulationScheme::make(kind);
  for (long trial = 0; trial < options.trials; ++trial) {
    RandomStream stream(options.seed,
                        static_cast<std::uint64_t>(trial) * 4 +
                            static_cast<std::uint64_t>(kind));
    int n = 1 + static_cast<int>(stream.next_u64() %
                                 static_cast<std::uint64_t>(options.max_users));
    const Deployment deployment = place_users(n);
    const ChannelRealization channel = sample_channel(stream, deployment);
    const double dbm = options.power_dbm_low +
                       (options.power_dbm_high - options.power_dbm_low) *
                           stream.next_unit();
    const PowerLevel p_tx = PowerLevel::from_dbm(dbm);
    const std::vector<Complex> sent = random_symbols(scheme, n, stream);
    const Complex noise = sample_circular_gaussian(stream, dbm_to_linear(-30.0));
    const Complex y = superimpose(sent, channel, p_tx, noise);

    QuboMatrix closed;
    switch (kind) {
      case ModKind::bpsk:
        closed = build_qubo_bpsk(y, channel, p_tx);
        break;
      case ModKind::qpsk:
        closed = build_qubo_qpsk(y, channel, p_tx);
        break;
      case ModKind::qam16:
        closed = build_qubo_qam16(y, channel, p_tx);
        break;
      case ModKind::qam64:
        throw std::invalid_argument("verify: no closed form exists for qam64");
    }
    const QuboMatrix generic = build_qubo_generic(y, channel, p_tx, scheme);
    outcome.max_deviation = std::max(
        outcome.max_deviation, qubo_coefficient_deviation(closed, generic));
  }
  return outcome;
}

}  // namespace nomaq
