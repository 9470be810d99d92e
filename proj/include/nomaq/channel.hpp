#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "nomaq/signal.hpp"

namespace nomaq {

/// Uplink geometry: user distances from the base station in meters and the
/// path-loss exponent tau.
struct Deployment {
  int n_users = 0;
  std::vector<double> distances;
  double path_loss_exponent = 2.0;
};

inline void validate(const Deployment& dep) {
  if (dep.n_users < 1 ||
      dep.distances.size() != static_cast<std::size_t>(dep.n_users)) {
    throw std::invalid_argument("Deployment: needs n_users >= 1 matching distances");
  }
  double prev = 0.0;
  for (double d : dep.distances) {
    if (!(d > prev) || !std::isfinite(d)) {
      throw std::invalid_argument("Deployment: distances must be strictly increasing and > 0");
    }
    prev = d;
  }
  if (!std::isfinite(dep.path_loss_exponent)) {
    throw std::invalid_argument("Deployment: path-loss exponent must be finite");
  }
}

/// Nearest user at 50 m, farthest at 100 m, the rest evenly spaced between.
/// A single user sits at the near position.
inline Deployment place_users(int n, double path_loss_exponent = 2.0) {
  if (n < 1) {
    throw std::invalid_argument("place_users: need at least one user");
  }
  Deployment dep;
  dep.n_users = n;
  dep.path_loss_exponent = path_loss_exponent;
  dep.distances.reserve(n);
  if (n == 1) {
    dep.distances.push_back(50.0);
  } else {
    for (int k = 0; k < n; ++k) {
      dep.distances.push_back(50.0 + 50.0 * k / (n - 1));
    }
  }
  validate(dep);
  return dep;
}

/// One draw of the per-user complex gains h_k = h~_k / sqrt(d_k^tau), where
/// h~_k is unit-variance circularly symmetric Gaussian (Rayleigh envelope).
struct ChannelRealization {
  std::vector<Complex> gains;
  Deployment deployment;
};

inline ChannelRealization sample_channel(RandomStream& stream,
                                         const Deployment& dep) {
  validate(dep);
  ChannelRealization ch;
  ch.deployment = dep;
  ch.gains.reserve(dep.n_users);
  for (int k = 0; k < dep.n_users; ++k) {
    const Complex fading = sample_circular_gaussian(stream, 1.0);
    const double attenuation =
        std::sqrt(std::pow(dep.distances[k], dep.path_loss_exponent));
    ch.gains.push_back(fading / attenuation);
  }
  return ch;
}

/// Received superposition y = sqrt(P) * sum_k s_k h_k + noise. Constellations
/// are unit peak, so the transmit amplitude enters here and nowhere else.
inline Complex superimpose(std::span<const Complex> symbols,
                           const ChannelRealization& channel,
                           const PowerLevel& p_tx, Complex noise) {
  if (symbols.size() != channel.gains.size()) {
    throw std::invalid_argument("superimpose: symbol count must match user count");
  }
  Complex sum{0.0, 0.0};
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    sum += symbols[k] * channel.gains[k];
  }
  return p_tx.amplitude() * sum + noise;
}

}  // namespace nomaq
