#pragma once

// Channel generation: device placement, distance-based path loss, Rayleigh
// block fading, and the composite gain of a direct path plus a reflecting
// surface.
//
// Per device k the relevant quantities are the direct gain h_k and the
// per-element cascaded gains c_k[m] (surface element m seen from the access
// point through device k). With reflection coefficients v[m] on the unit
// circle, the effective channel power is |h_k + sum_m conj(v[m]) c_k[m]|^2.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "aoisim/config.hpp"
#include "aoisim/rng.hpp"

namespace aoisim {

// Free-space-style power law: gain = ref * d^(-alpha). Zero or negative
// distance means two nodes are co-located, which the model cannot represent.
inline double pathloss(double distance_m, double alpha, double ref_gain) {
  if (!(distance_m > 0.0)) {
    throw std::invalid_argument("pathloss: distance must be positive, got " +
                                std::to_string(distance_m));
  }
  if (!(alpha > 0.0) || !(ref_gain > 0.0)) {
    throw std::invalid_argument("pathloss: alpha and ref_gain must be positive");
  }
  return ref_gain * std::pow(distance_m, -alpha);
}

// Uniform placement over a disc. The radial coordinate uses the square-root
// transform so that density is uniform per unit area, not per unit radius.
// Draw order per device: radius first, then angle.
inline std::vector<Vec2> place_devices(const SystemConfig& cfg, Rng& rng) {
  std::vector<Vec2> out(static_cast<std::size_t>(cfg.num_devices));
  for (auto& p : out) {
    const double r = cfg.device_radius_m * std::sqrt(rng.uniform());
    const double a = 2.0 * M_PI * rng.uniform();
    p.x = cfg.device_center.x + r * std::cos(a);
    p.y = cfg.device_center.y + r * std::sin(a);
  }
  return out;
}

struct ChannelRealization {
  std::vector<Vec2> positions;                    // device coordinates
  std::vector<std::complex<double>> direct;       // h_k, one per device
  std::vector<Eigen::VectorXcd> cascaded;         // c_k, length-M per device

  int num_devices() const { return static_cast<int>(direct.size()); }
  int num_elements() const {
    return cascaded.empty() ? 0 : static_cast<int>(cascaded.front().size());
  }
};

// Samples one block-fading realization. Small-scale fades are unit-variance
// circularly symmetric complex normals on every link; cfg.fading=false
// freezes them at 1 so gains reduce to pure path loss.
//
// Draw order (part of the determinism contract): the shared access
// point-to-surface link first (M draws), then per device its direct fade
// followed by its M surface-to-device fades.
inline ChannelRealization sample_channels(const SystemConfig& cfg,
                                          const std::vector<Vec2>& positions,
                                          Rng& rng) {
  if (static_cast<int>(positions.size()) != cfg.num_devices) {
    throw std::invalid_argument("sample_channels: expected " +
                                std::to_string(cfg.num_devices) + " positions, got " +
                                std::to_string(positions.size()));
  }
  const int m_count = cfg.num_elements;

  const double d_ap_irs = distance(cfg.ap_pos, cfg.irs_pos);
  const double loss_ap_irs =
      m_count > 0 ? pathloss(d_ap_irs, cfg.alpha_ap_irs, cfg.pathloss_ref) : 0.0;

  Eigen::VectorXcd ap_irs(m_count);
  for (int m = 0; m < m_count; ++m) {
    const std::complex<double> g = cfg.fading ? rng.complex_normal() : 1.0;
    ap_irs[m] = std::sqrt(loss_ap_irs) * g;
  }

  ChannelRealization ch;
  ch.positions = positions;
  ch.direct.resize(positions.size());
  ch.cascaded.resize(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const double loss_d =
        pathloss(distance(cfg.ap_pos, positions[k]), cfg.alpha_direct, cfg.pathloss_ref);
    const std::complex<double> gd = cfg.fading ? rng.complex_normal() : 1.0;
    ch.direct[k] = std::sqrt(loss_d) * gd;

    const double loss_r =
        m_count > 0 ? pathloss(distance(cfg.irs_pos, positions[k]), cfg.alpha_irs_dev,
                               cfg.pathloss_ref)
                    : 0.0;
    Eigen::VectorXcd c(m_count);
    for (int m = 0; m < m_count; ++m) {
      const std::complex<double> gr = cfg.fading ? rng.complex_normal() : 1.0;
      // Uplink pilot convention: both hops enter the cascade conjugated.
      c[m] = std::conj(std::sqrt(loss_r) * gr) * std::conj(ap_irs[m]);
    }
    ch.cascaded[k] = std::move(c);
  }
  return ch;
}

// Effective channel power |h + sum_m conj(v[m]) c[m]|^2 for one device.
inline double effective_gain(std::complex<double> direct,
                             const Eigen::VectorXcd& cascaded,
                             const Eigen::VectorXcd& v) {
  if (cascaded.size() != v.size()) {
    throw std::invalid_argument("effective_gain: coefficient count " +
                                std::to_string(v.size()) + " does not match element count " +
                                std::to_string(cascaded.size()));
  }
  const std::complex<double> combined = direct + v.dot(cascaded);  // v.dot = v^H c
  return std::norm(combined);
}

// Largest effective channel power any reflection setting can reach:
// all cascaded terms phase-aligned with the direct path.
inline double aligned_gain_bound(std::complex<double> direct,
                                 const Eigen::VectorXcd& cascaded) {
  return std::pow(std::abs(direct) + cascaded.cwiseAbs().sum(), 2);
}

// Reflection coefficients aligning every cascaded term with the direct
// path: v[m] = exp(j(arg c[m] - arg h)), so conj(v[m]) c[m] points along h
// and the effective gain meets the aligned bound. A zero direct gain uses
// phase zero as the reference.
inline Eigen::VectorXcd optimal_phases(std::complex<double> direct,
                                       const Eigen::VectorXcd& cascaded) {
  const double ref = std::abs(direct) > 0.0 ? std::arg(direct) : 0.0;
  Eigen::VectorXcd v(cascaded.size());
  for (Eigen::Index m = 0; m < cascaded.size(); ++m) {
    v[m] = std::polar(1.0, std::arg(cascaded[m]) - ref);
  }
  return v;
}

}  // namespace aoisim
