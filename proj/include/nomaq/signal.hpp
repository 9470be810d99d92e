#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nomaq {

/// Baseband sample: dimensionless complex amplitude.
using Complex = std::complex<double>;

inline bool is_finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline double dbm_to_linear(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double linear_to_dbm(double mw) {
  if (!(mw > 0.0)) {
    throw std::invalid_argument("linear_to_dbm: power must be > 0 mW");
  }
  return 10.0 * std::log10(mw);
}

/// A power carried in both dBm and linear milliwatts. Conversion happens once
/// at construction; all arithmetic downstream works on linear milliwatts.
class PowerLevel {
 public:
  static PowerLevel from_dbm(double dbm) {
    if (!std::isfinite(dbm)) {
      throw std::invalid_argument("PowerLevel: dBm value must be finite");
    }
    return PowerLevel(dbm, dbm_to_linear(dbm));
  }

  // Zero is allowed here (dbm saturates to -inf) so that degenerate
  // no-signal instances can be expressed.
  static PowerLevel from_linear_mw(double mw) {
    if (!(mw >= 0.0) || !std::isfinite(mw)) {
      throw std::invalid_argument("PowerLevel: linear power must be >= 0 mW");
    }
    const double dbm =
        mw > 0.0 ? linear_to_dbm(mw) : -std::numeric_limits<double>::infinity();
    return PowerLevel(dbm, mw);
  }

  double dbm() const { return dbm_; }
  double linear_mw() const { return linear_mw_; }
  double amplitude() const { return std::sqrt(linear_mw_); }

 private:
  PowerLevel(double dbm, double mw) : dbm_(dbm), linear_mw_(mw) {}
  double dbm_;
  double linear_mw_;
};

/// Deterministic substream source. Two streams constructed from the same
/// (master_seed, stream_index) pair replay the same sequence bit for bit;
/// distinct indices give statistically unrelated streams. The state is a
/// xoshiro256++ engine seeded through splitmix64 from both identifiers.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed), stream_index_(stream_index) {
    std::uint64_t s = mix64(master_seed + kGolden) ^
                      mix64(stream_index + 0x632be59bd9b4e019ULL);
    for (auto& word : state_) {
      s += kGolden;
      word = mix64(s);
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
      state_[0] = 1;  // xoshiro state must not be all zero
    }
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform value in the open interval (0, 1).
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer with `bits` random bits, bits in [1, 32].
  std::uint32_t next_bits(int bits) {
    if (bits < 1 || bits > 32) {
      throw std::invalid_argument("RandomStream::next_bits: bits outside [1, 32]");
    }
    return static_cast<std::uint32_t>(next_u64() >> (64 - bits));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
};

/// Zero-mean circularly symmetric complex Gaussian with E[|z|^2] = variance.
/// The variance is split evenly between the two components.
inline Complex sample_circular_gaussian(RandomStream& stream, double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument(
        "sample_circular_gaussian: variance must be finite and >= 0");
  }
  const double u1 = stream.next_unit();
  const double u2 = stream.next_unit();
  const double radius =
      std::sqrt(-2.0 * std::log(u1)) * std::sqrt(0.5 * variance);
  const double phase = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(phase), radius * std::sin(phase)};
}

}  // namespace nomaq
