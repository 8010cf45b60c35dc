#pragma once

// Short-packet reliability and age-of-information metrics.
//
// Decoding error for a D-bit payload over n channel uses at SNR g follows
// the normal approximation for the AWGN channel:
//   per = Q( (ln(1+g) - ln2 * D/n) / (sqrt(1 - (1+g)^-2) / sqrt(n)) )
// Average age is the long-run time average of a sawtooth that grows linearly
// and drops to a scheme-dependent reset level on each successful decode.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoisim/rng.hpp"

namespace aoisim {

constexpr double kPerFloor = 1e-15;
constexpr double kPerCeiling = 1.0 - 1e-15;

// Gaussian tail probability Q(x) = P[N(0,1) > x].
inline double q_function(double x) {
  return 0.5 * std::erfc(x * M_SQRT1_2);
}

struct LinkBudget {
  double snr = 0.0;          // linear receive SNR
  double blocklength = 0.0;  // channel uses available for the packet
  double payload_bits = 0.0;
};

inline double packet_error_rate(const LinkBudget& lb) {
  if (lb.snr < 0.0 || !std::isfinite(lb.snr)) {
    throw std::invalid_argument("packet_error_rate: snr must be finite and nonnegative");
  }
  if (!(lb.blocklength > 0.0) || !(lb.payload_bits > 0.0)) {
    throw std::invalid_argument("packet_error_rate: blocklength and payload must be positive");
  }
  if (lb.snr == 0.0) return 1.0;  // zero capacity, nothing decodes
  const double n = lb.blocklength;
  const double capacity = std::log1p(lb.snr);
  const double rate = M_LN2 * lb.payload_bits / n;
  const double one_plus = 1.0 + lb.snr;
  const double dispersion = std::sqrt(1.0 - 1.0 / (one_plus * one_plus)) / std::sqrt(n);
  return q_function((capacity - rate) / dispersion);
}

// The age formulas diverge as per -> 1 and lose meaning at exactly 0 or 1
// in a finite simulation, so evaluated error rates are pinned away from the
// endpoints. `clamped`, when given, reports whether pinning fired.
inline double clamp_per(double per, bool* clamped = nullptr) {
  const double out = std::clamp(per, kPerFloor, kPerCeiling);
  if (clamped) *clamped = (out != per);
  return out;
}

// Average age when every device transmits in every block over its own
// subband and a success resets age to one block:
//   avg = (T/2) * (2/(1-per) + 1)
inline double aoi_fdma(double per, double block_s) {
  if (!(per >= 0.0) || per >= 1.0) {
    throw std::invalid_argument("aoi_fdma: per must lie in [0, 1), got " +
                                std::to_string(per));
  }
  if (!(block_s > 0.0)) throw std::invalid_argument("aoi_fdma: block must be positive");
  return 0.5 * block_s * (2.0 / (1.0 - per) + 1.0);
}

// Average age when devices share the block through consecutive slots and a
// success resets age to the device's in-block completion time t_done:
//   avg = (T/2) * (2/(1-per) - 1) + t_done
inline double aoi_tdma(double per, double block_s, double done_s) {
  if (!(per >= 0.0) || per >= 1.0) {
    throw std::invalid_argument("aoi_tdma: per must lie in [0, 1), got " +
                                std::to_string(per));
  }
  if (!(block_s > 0.0)) throw std::invalid_argument("aoi_tdma: block must be positive");
  if (!(done_s > 0.0) || done_s > block_s + 1e-12) {
    throw std::invalid_argument("aoi_tdma: completion time must lie in (0, block], got " +
                                std::to_string(done_s));
  }
  return 0.5 * block_s * (2.0 / (1.0 - per) - 1.0) + done_s;
}

// Monte Carlo mirror of the closed forms above: simulate the sawtooth over
// num_blocks blocks with i.i.d. success draws and integrate the age curve.
// Age starts at reset_s; each block contributes T * (age_start + T/2); a
// success at the block boundary snaps age back to reset_s.
inline double empirical_aoi(double per, double block_s, double reset_s,
                            std::uint64_t num_blocks, Rng& rng) {
  if (!(per >= 0.0) || per >= 1.0) {
    throw std::invalid_argument("empirical_aoi: per must lie in [0, 1)");
  }
  if (!(block_s > 0.0) || !(reset_s > 0.0) || num_blocks == 0) {
    throw std::invalid_argument("empirical_aoi: block, reset, num_blocks must be positive");
  }
  double age = reset_s;
  double area = 0.0;
  for (std::uint64_t i = 0; i < num_blocks; ++i) {
    area += block_s * (age + 0.5 * block_s);
    age = (rng.uniform() >= per) ? reset_s : age + block_s;
  }
  return area / (static_cast<double>(num_blocks) * block_s);
}

enum class Access { fdma, tdma };

inline const char* access_name(Access a) { return a == Access::fdma ? "fdma" : "tdma"; }

// Per-device reliability and age for one resource allocation, plus the
// max-age objective and any numeric flags raised while evaluating it.
struct AoiReport {
  Access access = Access::fdma;
  std::vector<double> per;        // clamped error rates
  std::vector<double> aoi_s;      // per-device average age
  double max_aoi_s = 0.0;
  int worst_device = -1;
  bool per_clamped = false;       // any device hit the clamp

  void finalize() {
    max_aoi_s = 0.0;
    worst_device = -1;
    for (std::size_t k = 0; k < aoi_s.size(); ++k) {
      if (aoi_s[k] > max_aoi_s) {
        max_aoi_s = aoi_s[k];
        worst_device = static_cast<int>(k);
      }
    }
  }
};

}  // namespace aoisim
