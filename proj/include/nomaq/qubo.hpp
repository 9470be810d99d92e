#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nomaq/channel.hpp"
#include "nomaq/modulation.hpp"
#include "nomaq/signal.hpp"

namespace nomaq {

/// Upper-triangular quadratic form over binary variables:
/// E(q) = sum_{i<=j} Q_ij q_i q_j + offset.
///
/// Storage is sparse and keyed by (i, j); structurally zero couplings are
/// simply absent. The offset is the constant term of the expanded residual,
/// which the closed-form builders drop (it never moves the argmin).
struct QuboMatrix {
  int m = 0;
  double offset = 0.0;
  std::map<std::pair<int, int>, double> coeffs;

  void set(int i, int j, double value) {
    if (i < 0 || j < i || j >= m) {
      throw std::invalid_argument("QuboMatrix::set: need 0 <= i <= j < m");
    }
    if (!std::isfinite(value)) {
      throw std::invalid_argument("QuboMatrix::set: coefficient must be finite");
    }
    if (value == 0.0) {
      coeffs.erase({i, j});
    } else {
      coeffs[{i, j}] = value;
    }
  }

  double at(int i, int j) const {
    const auto it = coeffs.find({i, j});
    return it == coeffs.end() ? 0.0 : it->second;
  }

  /// Largest absolute coefficient (0 for an empty matrix).
  double scale() const {
    double s = 0.0;
    for (const auto& [key, value] : coeffs) s = std::max(s, std::abs(value));
    return s;
  }
};

inline double qubo_energy(const QuboMatrix& q, const QubitVector& bits) {
  if (bits.size() != static_cast<std::size_t>(q.m)) {
    throw std::invalid_argument("qubo_energy: vector length must equal qubit count");
  }
  double energy = q.offset;
  for (const auto& [key, value] : q.coeffs) {
    if (bits[key.first] && bits[key.second]) energy += value;
  }
  return energy;
}

/// Expands |y - sqrt(P) sum_k h_k c_k(q)|^2 over the affine qubit maps into
/// a QUBO, using q^2 = q to fold the squared linear terms onto the diagonal.
/// Valid for every scheme; the exact constant lands in `offset`, so the
/// energy of any bit vector reproduces the ML residual itself.
inline QuboMatrix build_qubo_generic(Complex y,
                                     const ChannelRealization& channel,
                                     const PowerLevel& p_tx,
                                     const ModulationScheme& scheme) {
  validate(channel.deployment);
  const int n = static_cast<int>(channel.gains.size());
  const int qps = scheme.qubits_per_symbol();
  const int m = n * qps;
  const double amp = p_tx.amplitude();
  const AffineQubitMap& map = scheme.map();

  // Received signal as an affine function of the bits: a + sum_i b_i q_i.
  std::vector<Complex> b(m);
  Complex a{0.0, 0.0};
  for (int k = 0; k < n; ++k) {
    const Complex g = amp * channel.gains[k];
    a += g * map.alpha;
    for (int t = 0; t < qps; ++t) {
      b[k * qps + t] = g * map.beta[t];
    }
  }

  const Complex r = y - a;
  QuboMatrix q;
  q.m = m;
  q.offset = std::norm(r);
  for (int i = 0; i < m; ++i) {
    const double bias =
        std::norm(b[i]) - 2.0 * (r.real() * b[i].real() + r.imag() * b[i].imag());
    q.set(i, i, bias);
    for (int j = i + 1; j < m; ++j) {
      const double coupling =
          2.0 * (b[i].real() * b[j].real() + b[i].imag() * b[j].imag());
      q.set(i, j, coupling);
    }
  }
  return q;
}

/// Closed-form BPSK coefficients (one qubit per user, offset dropped).
inline QuboMatrix build_qubo_bpsk(Complex y, const ChannelRealization& channel,
                                  const PowerLevel& p_tx) {
  validate(channel.deployment);
  const int n = static_cast<int>(channel.gains.size());
  const double p = p_tx.linear_mw();
  const double sqrt_p = p_tx.amplitude();
  const double y_r = y.real(), y_i = y.imag();

  double sum_r = 0.0, sum_i = 0.0;
  for (const Complex& h : channel.gains) {
    sum_r += h.real();
    sum_i += h.imag();
  }

  QuboMatrix q;
  q.m = n;
  for (int i = 0; i < n; ++i) {
    const double h_r = channel.gains[i].real();
    const double h_i = channel.gains[i].imag();
    const double bias =
        p * (-4.0 * h_r * (sum_r - h_r) - 4.0 * h_i * (sum_i - h_i)) -
        sqrt_p * (4.0 * y_r * h_r + 4.0 * y_i * h_i);
    q.set(i, i, bias);
    for (int j = i + 1; j < n; ++j) {
      const double g_r = channel.gains[j].real();
      const double g_i = channel.gains[j].imag();
      q.set(i, j, p * (8.0 * h_r * g_r + 8.0 * h_i * g_i));
    }
  }
  return q;
}

/// Closed-form QPSK coefficients. User k (0-based) owns qubits (2k, 2k+1)
/// for the real and imaginary rails; the intra-symbol coupling is
/// identically zero.
inline QuboMatrix build_qubo_qpsk(Complex y, const ChannelRealization& channel,
                                  const PowerLevel& p_tx) {
  validate(channel.deployment);
  const int n = static_cast<int>(channel.gains.size());
  const double p = p_tx.linear_mw();
  const double sqrt_2p = std::sqrt(2.0 * p_tx.linear_mw());
  const double y_r = y.real(), y_i = y.imag();

  double sum_r = 0.0, sum_i = 0.0;
  for (const Complex& h : channel.gains) {
    sum_r += h.real();
    sum_i += h.imag();
  }

  QuboMatrix q;
  q.m = 2 * n;
  for (int i = 0; i < n; ++i) {
    const double h_r = channel.gains[i].real();
    const double h_i = channel.gains[i].imag();
    const double other_r = sum_r - h_r;  // interference seen by user i
    const double other_i = sum_i - h_i;
    const double bias_re =
        0.5 * p *
            (-4.0 * h_r * (other_r - other_i) - 4.0 * h_i * (other_r + other_i)) -
        sqrt_2p * (2.0 * y_r * h_r + 2.0 * y_i * h_i);
    const double bias_im =
        0.5 * p *
            (-4.0 * h_r * (other_r + other_i) - 4.0 * h_i * (-other_r + other_i)) -
        sqrt_2p * (-2.0 * y_r * h_i + 2.0 * y_i * h_r);
    q.set(2 * i, 2 * i, bias_re);
    q.set(2 * i + 1, 2 * i + 1, bias_im);
    // (2i, 2i+1) stays zero for every user.
    for (int j = i + 1; j < n; ++j) {
      const double g_r = channel.gains[j].real();
      const double g_i = channel.gains[j].imag();
      const double same = 0.5 * p * (8.0 * h_r * g_r + 8.0 * h_i * g_i);
      const double cross = 0.5 * p * (8.0 * h_i * g_r - 8.0 * h_r * g_i);
      q.set(2 * i, 2 * j, same);
      q.set(2 * i + 1, 2 * j + 1, same);
      q.set(2 * i, 2 * j + 1, cross);
      q.set(2 * i + 1, 2 * j, -cross);
    }
  }
  return q;
}

/// Closed-form 16-QAM coefficients. User k owns qubits (4k..4k+3): two
/// amplitude bits per rail, the 4-weighted bit first. Cross-rail couplings
/// inside a symbol are identically zero.
inline QuboMatrix build_qubo_qam16(Complex y, const ChannelRealization& channel,
                                   const PowerLevel& p_tx) {
  validate(channel.deployment);
  const int n = static_cast<int>(channel.gains.size());
  const double p = p_tx.linear_mw();
  const double p9 = p / 9.0;
  const double sqrt_2p_3 = std::sqrt(2.0 * p_tx.linear_mw()) / 3.0;
  const double y_r = y.real(), y_i = y.imag();

  double sum_r = 0.0, sum_i = 0.0;
  for (const Complex& h : channel.gains) {
    sum_r += h.real();
    sum_i += h.imag();
  }

  QuboMatrix q;
  q.m = 4 * n;
  for (int i = 0; i < n; ++i) {
    const int ui = 4 * i;
    const double h_r = channel.gains[i].real();
    const double h_i = channel.gains[i].imag();
    const double other_r = sum_r - h_r;
    const double other_i = sum_i - h_i;

    q.set(ui, ui,
          p9 * (-4.0 * h_r * (h_r + 3.0 * (other_r - other_i)) -
                4.0 * h_i * (h_i + 3.0 * (other_r + other_i))) -
              sqrt_2p_3 * (4.0 * y_r * h_r + 4.0 * y_i * h_i));
    q.set(ui + 1, ui + 1,
          p9 * (-4.0 * h_r * (h_r + 1.5 * (other_r - other_i)) -
                4.0 * h_i * (h_i + 1.5 * (other_r + other_i))) -
              sqrt_2p_3 * (2.0 * y_r * h_r + 2.0 * y_i * h_i));
    q.set(ui + 2, ui + 2,
          p9 * (-4.0 * h_r * (h_r + 3.0 * (other_r + other_i)) -
                4.0 * h_i * (h_i + 3.0 * (-other_r + other_i))) -
              sqrt_2p_3 * (-4.0 * y_r * h_i + 4.0 * y_i * h_r));
    q.set(ui + 3, ui + 3,
          p9 * (-4.0 * h_r * (h_r + 1.5 * (other_r + other_i)) -
                4.0 * h_i * (h_i + 1.5 * (-other_r + other_i))) -
              sqrt_2p_3 * (-2.0 * y_r * h_i + 2.0 * y_i * h_r));

    const double rail = p9 * 8.0 * (h_r * h_r + h_i * h_i);
    q.set(ui, ui + 1, rail);
    q.set(ui + 2, ui + 3, rail);
    // (ui, ui+2), (ui, ui+3), (ui+1, ui+2), (ui+1, ui+3) stay zero.

    for (int j = i + 1; j < n; ++j) {
      const int uj = 4 * j;
      const double g_r = channel.gains[j].real();
      const double g_i = channel.gains[j].imag();
      const double dot = h_r * g_r + h_i * g_i;
      const double wedge = h_i * g_r - h_r * g_i;

      q.set(ui, uj, p9 * 16.0 * dot);
      q.set(ui + 2, uj + 2, p9 * 16.0 * dot);
      q.set(ui + 1, uj + 1, p9 * 4.0 * dot);
      q.set(ui + 3, uj + 3, p9 * 4.0 * dot);
      q.set(ui, uj + 1, p9 * 8.0 * dot);
      q.set(ui + 1, uj, p9 * 8.0 * dot);
      q.set(ui + 3, uj + 2, p9 * 8.0 * dot);
      q.set(ui + 2, uj + 3, p9 * 8.0 * dot);

      q.set(ui, uj + 2, p9 * 16.0 * wedge);
      q.set(ui + 2, uj, p9 * -16.0 * wedge);
      q.set(ui + 1, uj + 2, p9 * 8.0 * wedge);
      q.set(ui, uj + 3, p9 * 8.0 * wedge);
      q.set(ui + 2, uj + 1, p9 * -8.0 * wedge);
      q.set(ui + 3, uj, p9 * -8.0 * wedge);
      q.set(ui + 1, uj + 3, p9 * 4.0 * wedge);
      q.set(ui + 3, uj + 1, p9 * -4.0 * wedge);
    }
  }
  return q;
}

/// Text dump: "M <m>", "OFFSET <v>", then one "<i> <j> <v>" line per stored
/// coefficient with 0-based i <= j, 17 significant digits.
inline std::string qubo_dump(const QuboMatrix& q) {
  char line[96];
  std::string out;
  std::snprintf(line, sizeof(line), "M %d\n", q.m);
  out += line;
  std::snprintf(line, sizeof(line), "OFFSET %.17g\n", q.offset);
  out += line;
  for (const auto& [key, value] : q.coeffs) {
    std::snprintf(line, sizeof(line), "%d %d %.17g\n", key.first, key.second,
                  value);
    out += line;
  }
  return out;
}

/// Worst coefficient disagreement between two matrices of the same size,
/// normalized by the larger matrix scale. Offsets are excluded (the
/// closed-form builders drop theirs). Returns 0 for two empty matrices.
inline double qubo_coefficient_deviation(const QuboMatrix& a,
                                         const QuboMatrix& b) {
  if (a.m != b.m) {
    throw std::invalid_argument("qubo_coefficient_deviation: size mismatch");
  }
  const double scale = std::max(a.scale(), b.scale());
  double worst = 0.0;
  for (const auto& [key, value] : a.coeffs) {
    worst = std::max(worst, std::abs(value - b.at(key.first, key.second)));
  }
  for (const auto& [key, value] : b.coeffs) {
    worst = std::max(worst, std::abs(value - a.at(key.first, key.second)));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

}  // namespace nomaq
