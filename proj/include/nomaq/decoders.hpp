#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nomaq/channel.hpp"
#include "nomaq/modulation.hpp"
#include "nomaq/qubo.hpp"
#include "nomaq/signal.hpp"

namespace nomaq {

/// Squared residual |y - sqrt(P) sum_k h_k s_k|^2, the quantity every decoder
/// here minimizes one way or another.
inline double ml_metric(Complex y, const ChannelRealization& channel,
                        const PowerLevel& p_tx,
                        std::span<const Complex> symbols) {
  if (symbols.size() != channel.gains.size()) {
    throw std::invalid_argument("ml_metric: symbol count must match user count");
  }
  Complex sum{0.0, 0.0};
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    sum += channel.gains[k] * symbols[k];
  }
  return std::norm(y - p_tx.amplitude() * sum);
}

struct PhaseTiming {
  std::int64_t build_ns = 0;
  std::int64_t solve_ns = 0;
  std::int64_t readout_ns = 0;
  std::int64_t total_ns() const { return build_ns + solve_ns + readout_ns; }
};

struct DecodeResult {
  std::vector<Complex> symbols;
  QubitVector qubits;
  double metric = 0.0;
  PhaseTiming timing;
};

namespace detail {

inline std::int64_t elapsed_ns(std::chrono::steady_clock::time_point from,
                               std::chrono::steady_clock::time_point to) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(to - from).count();
}

inline QubitVector labels_to_qubits(std::uint64_t labels, int n_users, int qps) {
  const int m = n_users * qps;
  QubitVector bits(m);
  for (int i = 0; i < m; ++i) {
    bits[i] = static_cast<std::uint8_t>((labels >> (m - 1 - i)) & 1u);
  }
  return bits;
}

}  // namespace detail

/// Exhaustive ML detection: evaluates the residual for every symbol vector.
/// Candidates are enumerated in concatenated-qubit-label order, so exact
/// metric ties resolve to the lexicographically smallest labeling.
inline DecodeResult brute_force_ml(Complex y, const ChannelRealization& channel,
                                   const PowerLevel& p_tx,
                                   const ModulationScheme& scheme,
                                   std::uint64_t max_evaluations = 1ull << 24) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(channel.deployment);
  const int n = static_cast<int>(channel.gains.size());
  const int qps = scheme.qubits_per_symbol();
  const auto& points = scheme.constellation();

  std::uint64_t total = 1;
  for (int k = 0; k < n; ++k) {
    if (total > max_evaluations / points.size()) {
      throw std::invalid_argument("brute_force_ml: instance too large");
    }
    total *= points.size();
  }

  // Per-user lookup of h_k * point; the sqrt(P) factor is applied after the
  // sum so the winning metric matches ml_metric bit for bit.
  std::vector<std::vector<Complex>> faded(n);
  for (int k = 0; k < n; ++k) {
    faded[k].resize(points.size());
    for (std::size_t l = 0; l < points.size(); ++l) {
      faded[k][l] = channel.gains[k] * points[l];
    }
  }

  const double amp = p_tx.amplitude();
  const std::uint64_t label_mask = points.size() - 1;
  double best_metric = std::numeric_limits<double>::infinity();
  std::uint64_t best_labels = 0;
  for (std::uint64_t cand = 0; cand < total; ++cand) {
    Complex sum{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
      sum += faded[k][(cand >> ((n - 1 - k) * qps)) & label_mask];
    }
    const double metric = std::norm(y - amp * sum);
    if (metric < best_metric) {
      best_metric = metric;
      best_labels = cand;
    }
  }

  DecodeResult result;
  result.qubits = detail::labels_to_qubits(best_labels, n, qps);
  result.symbols.reserve(n);
  for (int k = 0; k < n; ++k) {
    result.symbols.push_back(points[(best_labels >> ((n - 1 - k) * qps)) & label_mask]);
  }
  result.metric = best_metric;
  result.timing.solve_ns = detail::elapsed_ns(t0, std::chrono::steady_clock::now());
  return result;
}

/// Global minimum of a QUBO by enumeration, usable up to 24 qubits. Ties go
/// to the lexicographically smallest bit vector.
inline std::pair<QubitVector, double> exhaustive_qubo(const QuboMatrix& q) {
  if (q.m < 0 || q.m > 24) {
    throw std::invalid_argument("exhaustive_qubo: supports at most 24 qubits");
  }
  const int m = q.m;
  struct Term {
    std::uint32_t mask;
    double value;
  };
  std::vector<Term> terms;
  terms.reserve(q.coeffs.size());
  for (const auto& [key, value] : q.coeffs) {
    // Bit i of the counter is qubit i read MSB-first, so counter order is
    // lexicographic order of the bit vectors.
    const std::uint32_t mask = (1u << (m - 1 - key.first)) |
                               (1u << (m - 1 - key.second));
    terms.push_back({mask, value});
  }

  double best_energy = std::numeric_limits<double>::infinity();
  std::uint32_t best_state = 0;
  const std::uint64_t count = 1ull << m;
  for (std::uint64_t state = 0; state < count; ++state) {
    double energy = q.offset;
    for (const Term& term : terms) {
      if ((state & term.mask) == term.mask) energy += term.value;
    }
    if (energy < best_energy) {
      best_energy = energy;
      best_state = static_cast<std::uint32_t>(state);
    }
  }

  QubitVector bits(m);
  for (int i = 0; i < m; ++i) {
    bits[i] = static_cast<std::uint8_t>((best_state >> (m - 1 - i)) & 1u);
  }
  return {std::move(bits), best_energy};
}

/// Sampler parameters. reads follows the hardware convention of repeating
/// the anneal R times and keeping the best answers; beta bounds of zero are
/// resolved per matrix (0.1 over the mean |coefficient| up to 10 over the
/// smallest nonzero |coefficient|). anneal_time_us is carried as metadata
/// only; the software sampler has no analog of it.
struct AnnealParams {
  long reads = 1000;
  int sweeps_per_read = 64;
  double beta_min = 0.0;
  double beta_max = 0.0;
  double anneal_time_us = 20.0;
};

inline void validate(const AnnealParams& params) {
  if (params.reads < 1) {
    throw std::invalid_argument("AnnealParams: reads must be >= 1");
  }
  if (params.sweeps_per_read < 1) {
    throw std::invalid_argument("AnnealParams: sweeps_per_read must be >= 1");
  }
  if (params.beta_min < 0.0 || params.beta_max < 0.0 ||
      !std::isfinite(params.beta_min) || !std::isfinite(params.beta_max)) {
    throw std::invalid_argument("AnnealParams: beta bounds must be finite and >= 0");
  }
  if (params.beta_min > 0.0 && params.beta_max > 0.0 &&
      params.beta_min >= params.beta_max) {
    throw std::invalid_argument("AnnealParams: need beta_min < beta_max");
  }
}

struct SampleRecord {
  QubitVector qubits;
  double energy = 0.0;
  long occurrences = 0;
};

/// Aggregated annealer output over R reads, ordered best first: ascending
/// energy, then descending occurrences, then lexicographic bit vector.
struct SampleSet {
  std::vector<SampleRecord> records;
  long reads = 0;

  const SampleRecord& best() const {
    if (records.empty()) throw std::logic_error("SampleSet: empty");
    return records.front();
  }
};

/// Simulated annealing over the QUBO: independent Metropolis descents with
/// single-bit flips under a geometric inverse-temperature ramp, one final
/// state recorded per read. Deterministic given the stream; reads consume
/// the stream sequentially, so a longer run extends a shorter one.
inline SampleSet anneal_qubo(const QuboMatrix& q, const AnnealParams& params,
                             RandomStream& stream) {
  validate(params);
  const int m = q.m;

  double mean_abs = 0.0;
  double min_abs = std::numeric_limits<double>::infinity();
  for (const auto& [key, value] : q.coeffs) {
    mean_abs += std::abs(value);
    min_abs = std::min(min_abs, std::abs(value));
  }
  mean_abs = q.coeffs.empty() ? 0.0 : mean_abs / q.coeffs.size();
  const double beta_min =
      params.beta_min > 0.0 ? params.beta_min
                            : (mean_abs > 0.0 ? 0.1 / mean_abs : 0.1);
  const double beta_max =
      params.beta_max > 0.0 ? params.beta_max
                            : (std::isfinite(min_abs) ? 10.0 / min_abs : 10.0);
  if (!(beta_min > 0.0 && beta_min < beta_max)) {
    throw std::invalid_argument("anneal_qubo: resolved beta schedule is not increasing");
  }

  const int sweeps = params.sweeps_per_read;
  std::vector<double> betas(sweeps);
  for (int s = 0; s < sweeps; ++s) {
    betas[s] = sweeps == 1
                   ? beta_max
                   : beta_min * std::pow(beta_max / beta_min,
                                         static_cast<double>(s) / (sweeps - 1));
  }

  // Dense symmetric view for O(m) flip updates.
  std::vector<double> diag(m, 0.0);
  std::vector<double> coupling(static_cast<std::size_t>(m) * m, 0.0);
  for (const auto& [key, value] : q.coeffs) {
    if (key.first == key.second) {
      diag[key.first] = value;
    } else {
      coupling[static_cast<std::size_t>(key.first) * m + key.second] = value;
      coupling[static_cast<std::size_t>(key.second) * m + key.first] = value;
    }
  }

  std::map<QubitVector, long> counts;
  QubitVector state(m);
  std::vector<double> field(m);
  for (long read = 0; read < params.reads; ++read) {
    for (int i = 0; i < m; ++i) {
      state[i] = static_cast<std::uint8_t>(stream.next_bits(1));
    }
    for (int i = 0; i < m; ++i) {
      double f = diag[i];
      const double* row = coupling.data() + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) {
        if (state[j]) f += row[j];
      }
      field[i] = f;
    }
    for (int s = 0; s < sweeps; ++s) {
      const double beta = betas[s];
      for (int i = 0; i < m; ++i) {
        const double delta = state[i] ? -field[i] : field[i];
        bool accept = delta <= 0.0;
        if (!accept) {
          const double exponent = beta * delta;
          // exp(-40) is below the smallest value next_unit can return.
          accept = exponent < 40.0 && stream.next_unit() < std::exp(-exponent);
        }
        if (accept) {
          state[i] ^= 1u;
          const double sign = state[i] ? 1.0 : -1.0;
          const double* row = coupling.data() + static_cast<std::size_t>(i) * m;
          // row[i] is zero, so field[i] is untouched as it must be.
          for (int j = 0; j < m; ++j) {
            field[j] += sign * row[j];
          }
        }
      }
    }
    ++counts[state];
  }

  SampleSet set;
  set.reads = params.reads;
  set.records.reserve(counts.size());
  for (const auto& [bits, occurrences] : counts) {
    set.records.push_back({bits, qubo_energy(q, bits), occurrences});
  }
  std::sort(set.records.begin(), set.records.end(),
            [](const SampleRecord& a, const SampleRecord& b) {
              if (a.energy != b.energy) return a.energy < b.energy;
              if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
              return a.qubits < b.qubits;
            });
  return set;
}

/// QUBO-based ML decoding: build the generic matrix, sample it, read out the
/// best record. The reported metric is recomputed from the residual, not the
/// QUBO energy, so it is directly comparable with the other decoders.
inline DecodeResult decode_via_annealer(Complex y,
                                        const ChannelRealization& channel,
                                        const PowerLevel& p_tx,
                                        const ModulationScheme& scheme,
                                        const AnnealParams& params,
                                        RandomStream& stream) {
  const auto t0 = std::chrono::steady_clock::now();
  const QuboMatrix q = build_qubo_generic(y, channel, p_tx, scheme);
  const auto t1 = std::chrono::steady_clock::now();
  const SampleSet samples = anneal_qubo(q, params, stream);
  const auto t2 = std::chrono::steady_clock::now();

  const int n = static_cast<int>(channel.gains.size());
  const int qps = scheme.qubits_per_symbol();
  DecodeResult result;
  result.qubits = samples.best().qubits;
  result.symbols.reserve(n);
  for (int k = 0; k < n; ++k) {
    const std::span<const std::uint8_t> slice(result.qubits.data() + k * qps, qps);
    result.symbols.push_back(qubits_to_symbol(scheme, slice));
  }
  result.metric = ml_metric(y, channel, p_tx, result.symbols);
  const auto t3 = std::chrono::steady_clock::now();
  result.timing.build_ns = detail::elapsed_ns(t0, t1);
  result.timing.solve_ns = detail::elapsed_ns(t1, t2);
  result.timing.readout_ns = detail::elapsed_ns(t2, t3);
  return result;
}

/// Successive interference cancellation with hard nearest-symbol slicing.
/// Users are peeled in descending instantaneous |h_k|^2 order (equal
/// transmit powers make channel strength the only ordering signal); each
/// stage subtracts the reconstructed contribution from the residual.
inline DecodeResult sic_decode(Complex y, const ChannelRealization& channel,
                               const PowerLevel& p_tx,
                               const ModulationScheme& scheme) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(channel.deployment);
  const int n = static_cast<int>(channel.gains.size());
  const auto& points = scheme.constellation();
  const double amp = p_tx.amplitude();

  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::norm(channel.gains[a]) > std::norm(channel.gains[b]);
  });

  std::vector<int> labels(n, 0);
  Complex residual = y;
  for (const int k : order) {
    const Complex g = channel.gains[k];
    double best_metric = std::numeric_limits<double>::infinity();
    int best_label = 0;
    for (std::size_t l = 0; l < points.size(); ++l) {
      const double metric = std::norm(residual - amp * (g * points[l]));
      if (metric < best_metric) {
        best_metric = metric;
        best_label = static_cast<int>(l);
      }
    }
    labels[k] = best_label;
    residual -= amp * (g * points[best_label]);
  }

  const int qps = scheme.qubits_per_symbol();
  DecodeResult result;
  result.symbols.reserve(n);
  result.qubits.resize(static_cast<std::size_t>(n) * qps);
  for (int k = 0; k < n; ++k) {
    result.symbols.push_back(points[labels[k]]);
    for (int t = 0; t < qps; ++t) {
      result.qubits[k * qps + t] =
          static_cast<std::uint8_t>((labels[k] >> (qps - 1 - t)) & 1);
    }
  }
  result.metric = ml_metric(y, channel, p_tx, result.symbols);
  result.timing.solve_ns = detail::elapsed_ns(t0, std::chrono::steady_clock::now());
  return result;
}

}  // namespace nomaq
