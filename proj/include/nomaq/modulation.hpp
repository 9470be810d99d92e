#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nomaq/signal.hpp"

namespace nomaq {

enum class ModKind { bpsk, qpsk, qam16, qam64 };

inline std::string_view to_string(ModKind kind) {
  switch (kind) {
    case ModKind::bpsk:
      return "bpsk";
    case ModKind::qpsk:
      return "qpsk";
    case ModKind::qam16:
      return "qam16";
    case ModKind::qam64:
      return "qam64";
  }
  throw std::invalid_argument("to_string: unknown modulation kind");
}

inline ModKind parse_mod_kind(std::string_view name) {
  if (name == "bpsk") return ModKind::bpsk;
  if (name == "qpsk") return ModKind::qpsk;
  if (name == "qam16") return ModKind::qam16;
  if (name == "qam64") return ModKind::qam64;
  throw std::invalid_argument("unknown modulation scheme: " + std::string(name) +
                              " (expected bpsk, qpsk, qam16 or qam64)");
}

/// Binary decision variables, one entry per qubit, each 0 or 1.
using QubitVector = std::vector<std::uint8_t>;

/// Affine form of a per-user qubit-to-symbol map: c(q) = alpha + sum_t beta[t] q[t].
/// All four constellations are expressible this way, which is what lets the
/// squared ML residual collapse into a quadratic form over the bits.
struct AffineQubitMap {
  Complex alpha;
  std::vector<Complex> beta;
};

class ModulationScheme {
 public:
  static ModulationScheme make(ModKind kind) {
    AffineQubitMap map;
    switch (kind) {
      case ModKind::bpsk:
        // s = 2q - 1
        map.alpha = {-1.0, 0.0};
        map.beta = {{2.0, 0.0}};
        break;
      case ModKind::qpsk: {
        // s = [(2q1 - 1) + j(2q2 - 1)] / sqrt(2)
        const double s = 1.0 / std::sqrt(2.0);
        map.alpha = {-s, -s};
        map.beta = {{2.0 * s, 0.0}, {0.0, 2.0 * s}};
        break;
      }
      case ModKind::qam16: {
        // s = [(4q1 + 2q2 - 3) + j(4q3 + 2q4 - 3)] / (3 sqrt(2))
        const double b = 1.0 / (3.0 * std::sqrt(2.0));
        map.alpha = {-3.0 * b, -3.0 * b};
        map.beta = {{4.0 * b, 0.0},
                    {2.0 * b, 0.0},
                    {0.0, 4.0 * b},
                    {0.0, 2.0 * b}};
        break;
      }
      case ModKind::qam64: {
        // s = a(8q1 + 4q2 + 2q3 - 7) + j a(8q4 + 4q5 + 2q6 - 7), a = 1/(7 sqrt(2))
        // keeps the corner points on the unit circle like the other schemes.
        const double a = 1.0 / (7.0 * std::sqrt(2.0));
        map.alpha = {-7.0 * a, -7.0 * a};
        map.beta = {{8.0 * a, 0.0}, {4.0 * a, 0.0}, {2.0 * a, 0.0},
                    {0.0, 8.0 * a}, {0.0, 4.0 * a}, {0.0, 2.0 * a}};
        break;
      }
    }
    return ModulationScheme(kind, std::move(map));
  }

  static ModulationScheme make(std::string_view name) {
    return make(parse_mod_kind(name));
  }

  ModKind kind() const { return kind_; }
  int qubits_per_symbol() const { return static_cast<int>(map_.beta.size()); }
  const AffineQubitMap& map() const { return map_; }

  /// All 2^qubits_per_symbol points, indexed by the label value with the
  /// first qubit as the most significant bit.
  const std::vector<Complex>& constellation() const { return constellation_; }

 private:
  ModulationScheme(ModKind kind, AffineQubitMap map)
      : kind_(kind), map_(std::move(map)) {
    const int qps = qubits_per_symbol();
    constellation_.resize(std::size_t{1} << qps);
    for (std::size_t label = 0; label < constellation_.size(); ++label) {
      Complex point = map_.alpha;
      for (int t = 0; t < qps; ++t) {
        if ((label >> (qps - 1 - t)) & 1u) point += map_.beta[t];
      }
      constellation_[label] = point;
    }
  }

  ModKind kind_;
  AffineQubitMap map_;
  std::vector<Complex> constellation_;
};

inline Complex qubits_to_symbol(const ModulationScheme& scheme,
                                std::span<const std::uint8_t> qubits) {
  const auto& map = scheme.map();
  if (qubits.size() != map.beta.size()) {
    throw std::invalid_argument("qubits_to_symbol: slice length must equal qubits_per_symbol");
  }
  Complex s = map.alpha;
  for (std::size_t t = 0; t < qubits.size(); ++t) {
    if (qubits[t] > 1) {
      throw std::invalid_argument("qubits_to_symbol: qubit values must be 0 or 1");
    }
    if (qubits[t]) s += map.beta[t];
  }
  return s;
}

/// Label of the constellation point `s`, or -1 when `s` is not a point.
/// Tolerance is absolute, 1e-9 per component; only float noise is absorbed.
inline int symbol_label(const ModulationScheme& scheme, Complex s) {
  constexpr double kTol = 1e-9;
  const auto& points = scheme.constellation();
  for (std::size_t label = 0; label < points.size(); ++label) {
    if (std::abs(points[label].real() - s.real()) <= kTol &&
        std::abs(points[label].imag() - s.imag()) <= kTol) {
      return static_cast<int>(label);
    }
  }
  return -1;
}

inline QubitVector symbol_to_qubits(const ModulationScheme& scheme, Complex s) {
  const int label = symbol_label(scheme, s);
  if (label < 0) {
    throw std::invalid_argument("symbol_to_qubits: value is not a constellation point");
  }
  const int qps = scheme.qubits_per_symbol();
  QubitVector bits(qps);
  for (int t = 0; t < qps; ++t) {
    bits[t] = static_cast<std::uint8_t>((label >> (qps - 1 - t)) & 1);
  }
  return bits;
}

/// Uniform i.i.d. constellation points, one per user.
inline std::vector<Complex> random_symbols(const ModulationScheme& scheme,
                                           int n_users, RandomStream& stream) {
  if (n_users < 0) {
    throw std::invalid_argument("random_symbols: n_users must be >= 0");
  }
  std::vector<Complex> symbols;
  symbols.reserve(n_users);
  for (int k = 0; k < n_users; ++k) {
    const std::uint32_t label = stream.next_bits(scheme.qubits_per_symbol());
    symbols.push_back(scheme.constellation()[label]);
  }
  return symbols;
}

/// Hamming distance between the concatenated qubit labelings of two symbol
/// lists. The qubit labeling is the bit mapping; no Gray re-labeling.
inline long count_bit_errors(const ModulationScheme& scheme,
                             std::span<const Complex> sent,
                             std::span<const Complex> decoded) {
  if (sent.size() != decoded.size()) {
    throw std::invalid_argument("count_bit_errors: length mismatch");
  }
  long errors = 0;
  for (std::size_t k = 0; k < sent.size(); ++k) {
    const int a = symbol_label(scheme, sent[k]);
    const int b = symbol_label(scheme, decoded[k]);
    if (a < 0 || b < 0) {
      throw std::invalid_argument("count_bit_errors: non-constellation entry");
    }
    errors += std::popcount(static_cast<unsigned>(a ^ b));
  }
  return errors;
}

}  // namespace nomaq
