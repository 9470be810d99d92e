#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nomaq/nomaq.hpp"

namespace nomaq {

namespace detail {

/// Parses "1", "-0.5", "1+2j", "0.3-0.7j" (also with trailing 'i').
inline Complex parse_complex(std::string text) {
  text.erase(std::remove(text.begin(), text.end(), ' '), text.end());
  if (text.empty()) throw std::invalid_argument("empty complex literal");
  bool has_unit = text.back() == 'j' || text.back() == 'i';
  if (!has_unit) {
    std::size_t used = 0;
    const double re = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad complex literal: " + text);
    return {re, 0.0};
  }
  text.pop_back();
  // split at the last sign that is not a leading sign or an exponent sign
  std::size_t split = std::string::npos;
  for (std::size_t idx = text.size(); idx-- > 1;) {
    if ((text[idx] == '+' || text[idx] == '-') && text[idx - 1] != 'e' &&
        text[idx - 1] != 'E') {
      split = idx;
      break;
    }
  }
  if (split == std::string::npos) {
    // pure imaginary, e.g. "2j" or "j"
    const std::string imag = text.empty() || text == "+" || text == "-"
                                 ? text + "1"
                                 : text;
    return {0.0, std::stod(imag)};
  }
  const double re = std::stod(text.substr(0, split));
  std::string imag = text.substr(split);
  if (imag == "+" || imag == "-") imag += "1";
  return {re, std::stod(imag)};
}

inline std::vector<Complex> parse_complex_list(const std::string& text) {
  std::vector<Complex> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    values.push_back(parse_complex(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

inline void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << content;
}

struct InstanceFlags {
  std::string scheme = "bpsk";
  int users = 3;
  double power_dbm = 10.0;
  double noise_dbm = -30.0;
  std::uint64_t seed = 1;
  std::string gains;
  std::string received;
};

struct Instance {
  ModulationScheme scheme;
  ChannelRealization channel;
  PowerLevel p_tx;
  Complex y;
  std::vector<Complex> sent;  // empty when the channel was given explicitly
};

/// Builds a decode/dump instance either from explicit --gains/--received or
/// by drawing channel, symbols and noise from the seed.
inline Instance make_instance(const InstanceFlags& flags) {
  ModulationScheme scheme = ModulationScheme::make(parse_mod_kind(flags.scheme));
  const PowerLevel p_tx = PowerLevel::from_dbm(flags.power_dbm);
  if (!flags.gains.empty() || !flags.received.empty()) {
    if (flags.gains.empty() || flags.received.empty()) {
      throw std::runtime_error("--gains and --received must be given together");
    }
    const std::vector<Complex> gains = parse_complex_list(flags.gains);
    ChannelRealization channel;
    channel.deployment = place_users(static_cast<int>(gains.size()));
    channel.gains = gains;
    return {std::move(scheme), std::move(channel), p_tx,
            parse_complex(flags.received), {}};
  }
  RandomStream stream(flags.seed, 0);
  const Deployment deployment = place_users(flags.users);
  ChannelRealization channel = sample_channel(stream, deployment);
  std::vector<Complex> sent = random_symbols(scheme, flags.users, stream);
  const Complex noise =
      sample_circular_gaussian(stream, dbm_to_linear(flags.noise_dbm));
  const Complex y = superimpose(sent, channel, p_tx, noise);
  return {std::move(scheme), std::move(channel), p_tx, y, std::move(sent)};
}

inline void add_instance_flags(CLI::App* cmd, InstanceFlags& flags) {
  cmd->add_option("--scheme", flags.scheme, "bpsk, qpsk, qam16 or qam64");
  cmd->add_option("--users", flags.users, "number of users")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--power-dbm", flags.power_dbm, "transmit power in dBm");
  cmd->add_option("--noise-dbm", flags.noise_dbm, "noise power in dBm");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--gains", flags.gains,
                  "comma-separated complex channel gains, e.g. \"1,0.5-0.2j\"");
  cmd->add_option("--received", flags.received,
                  "received sample as a complex literal");
}

inline std::string format_complex(Complex z) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%+.6g%+.6gj", z.real(), z.imag());
  return buffer;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Returns the process exit code; 2 is reserved for a `verify`
/// deviation beyond tolerance.
inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"QUBO-based maximum-likelihood decoding toolkit for uplink NOMA",
               "noma-qubo"};
  app.require_subcommand(1);

  // ber-sweep
  auto* sweep_cmd = app.add_subcommand(
      "ber-sweep", "run a Monte-Carlo BER sweep from a config file and emit CSV");
  std::string sweep_config;
  std::string sweep_out;
  std::optional<std::uint64_t> sweep_seed;
  std::optional<std::string> sweep_scheme;
  std::optional<int> sweep_users;
  std::vector<double> sweep_powers;
  std::optional<double> sweep_noise;
  std::optional<long> sweep_trials;
  std::optional<int> sweep_parallel;
  bool sweep_no_timing = false;
  sweep_cmd->add_option("--config", sweep_config, "config file (JSON)")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "output CSV path (default stdout)");
  sweep_cmd->add_option("--seed", sweep_seed, "override config seed");
  sweep_cmd->add_option("--scheme", sweep_scheme, "override config scheme");
  sweep_cmd->add_option("--users", sweep_users, "override config n_users");
  sweep_cmd->add_option("--power-dbm", sweep_powers,
                        "override power list (repeatable)");
  sweep_cmd->add_option("--noise-dbm", sweep_noise, "override config noise");
  sweep_cmd->add_option("--trials", sweep_trials, "override config trials");
  sweep_cmd->add_option("--parallel", sweep_parallel,
                        "override config parallel_width");
  sweep_cmd->add_flag("--no-timing", sweep_no_timing,
                      "zero the timing column for byte-reproducible output");

  // decode
  auto* decode_cmd =
      app.add_subcommand("decode", "decode one instance and print the result");
  detail::InstanceFlags decode_flags;
  detail::add_instance_flags(decode_cmd, decode_flags);
  std::vector<std::string> decode_decoders{"bf", "sic", "qa"};
  long decode_reads = 1000;
  int decode_sweeps = 64;
  decode_cmd->add_option("--decoder", decode_decoders,
                         "decoders to run (repeatable: bf, sic, qa)");
  decode_cmd->add_option("--reads", decode_reads, "annealer reads");
  decode_cmd->add_option("--sweeps", decode_sweeps, "annealer sweeps per read");

  // qubo-dump
  auto* dump_cmd = app.add_subcommand(
      "qubo-dump", "emit the QUBO matrix of one instance in text form");
  detail::InstanceFlags dump_flags;
  detail::add_instance_flags(dump_cmd, dump_flags);
  std::string dump_out;
  dump_cmd->add_option("--out", dump_out, "output path (default stdout)");

  // verify
  auto* verify_cmd = app.add_subcommand(
      "verify",
      "cross-check closed-form QUBO coefficients against the generic builder");
  std::vector<std::string> verify_schemes{"bpsk", "qpsk", "qam16"};
  long verify_trials = 1000;
  int verify_users = 4;
  std::uint64_t verify_seed = 1;
  double verify_tol = 1e-9;
  verify_cmd->add_option("--scheme", verify_schemes,
                         "schemes to check (repeatable; default all closed forms)");
  verify_cmd->add_option("--trials", verify_trials, "instances per scheme");
  verify_cmd->add_option("--users", verify_users, "maximum user count");
  verify_cmd->add_option("--seed", verify_seed, "master seed");
  verify_cmd->add_option("--tol", verify_tol, "deviation tolerance");

  // bench
  auto* bench_cmd = app.add_subcommand(
      "bench", "run a sweep and print the per-decoder timing table");
  std::string bench_config;
  std::optional<std::uint64_t> bench_seed;
  std::optional<long> bench_trials;
  bench_cmd->add_option("--config", bench_config, "config file (JSON)")
      ->required();
  bench_cmd->add_option("--seed", bench_seed, "override config seed");
  bench_cmd->add_option("--trials", bench_trials, "override config trials");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sweep_cmd->parsed()) {
      SimulationConfig config = load_config_file(sweep_config);
      if (sweep_seed) config.seed = *sweep_seed;
      if (sweep_scheme) config.scheme = parse_mod_kind(*sweep_scheme);
      if (sweep_users) config.n_users = *sweep_users;
      if (!sweep_powers.empty()) config.power_dbm_list = sweep_powers;
      if (sweep_noise) config.noise_dbm = *sweep_noise;
      if (sweep_trials) config.trials = *sweep_trials;
      if (sweep_parallel) config.parallel_width = *sweep_parallel;
      validate(config);
      const SweepResult result = run_ber_sweep(config);
      detail::write_output(sweep_out, to_csv(result.records, !sweep_no_timing));
    } else if (decode_cmd->parsed()) {
      const detail::Instance instance = detail::make_instance(decode_flags);
      AnnealParams anneal;
      anneal.reads = decode_reads;
      anneal.sweeps_per_read = decode_sweeps;
      std::cout << "scheme " << to_string(instance.scheme.kind()) << ", "
                << instance.channel.gains.size() << " users, P = "
                << instance.p_tx.dbm() << " dBm\n";
      std::cout << "received y = " << detail::format_complex(instance.y) << "\n";
      for (std::size_t k = 0; k < instance.channel.gains.size(); ++k) {
        std::cout << "h[" << k << "] = "
                  << detail::format_complex(instance.channel.gains[k]) << "\n";
      }
      if (!instance.sent.empty()) {
        std::cout << "sent:";
        for (const Complex& s : instance.sent) {
          std::cout << " " << detail::format_complex(s);
        }
        std::cout << "\n";
      }
      for (const std::string& name : decode_decoders) {
        const DecoderKind kind = parse_decoder_kind(name);
        DecodeResult result;
        switch (kind) {
          case DecoderKind::bf:
            result = brute_force_ml(instance.y, instance.channel, instance.p_tx,
                                    instance.scheme);
            break;
          case DecoderKind::sic:
            result = sic_decode(instance.y, instance.channel, instance.p_tx,
                                instance.scheme);
            break;
          case DecoderKind::qa: {
            RandomStream stream(decode_flags.seed, 1);
            result = decode_via_annealer(instance.y, instance.channel,
                                         instance.p_tx, instance.scheme, anneal,
                                         stream);
            break;
          }
        }
        std::cout << name << ":";
        for (const Complex& s : result.symbols) {
          std::cout << " " << detail::format_complex(s);
        }
        char tail[160];
        std::snprintf(tail, sizeof(tail), "  metric %.6g  time %lld ns",
                      result.metric,
                      static_cast<long long>(result.timing.total_ns()));
        std::cout << tail;
        if (!instance.sent.empty()) {
          std::cout << "  bit errors "
                    << count_bit_errors(instance.scheme, instance.sent,
                                        result.symbols);
        }
        std::cout << "\n";
      }
    } else if (dump_cmd->parsed()) {
      const detail::Instance instance = detail::make_instance(dump_flags);
      const QuboMatrix q = build_qubo_generic(instance.y, instance.channel,
                                              instance.p_tx, instance.scheme);
      detail::write_output(dump_out, qubo_dump(q));
    } else if (verify_cmd->parsed()) {
      VerifyOptions options;
      options.trials = verify_trials;
      options.max_users = verify_users;
      options.seed = verify_seed;
      bool beyond_tolerance = false;
      for (const std::string& name : verify_schemes) {
        const VerifyOutcome outcome =
            verify_closed_form(parse_mod_kind(name), options);
        char line[160];
        std::snprintf(line, sizeof(line),
                      "%-6s max deviation %.3e over %ld instances  %s\n",
                      name.c_str(), outcome.max_deviation, outcome.trials,
                      outcome.max_deviation < verify_tol ? "ok" : "DEVIATES");
        std::cout << line;
        beyond_tolerance = beyond_tolerance || outcome.max_deviation >= verify_tol;
      }
      if (beyond_tolerance) return 2;
    } else if (bench_cmd->parsed()) {
      SimulationConfig config = load_config_file(bench_config);
      if (bench_seed) config.seed = *bench_seed;
      if (bench_trials) config.trials = *bench_trials;
      validate(config);
      const SweepResult result = run_ber_sweep(config);
      std::cout << timing_report(result);
      char line[96];
      std::snprintf(line, sizeof(line), "wall time %.3f ms\n",
                    result.wall_ns / 1e6);
      std::cout << line;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nomaq
