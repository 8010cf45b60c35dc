#pragma once

// Max-min age optimization when devices take consecutive slots within each
// block. Only one device transmits at a time, so the surface serves it
// exclusively and the optimal reflection is the closed-form phase
// alignment; the remaining problem is splitting the block into slots.
// A device finishing its slot later carries extra age equal to its
// completion time, which couples the slots through their running sum.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "aoisim/channel.hpp"
#include "aoisim/config.hpp"
#include "aoisim/fbl.hpp"

namespace aoisim {

constexpr double kSlotFloorS = 1e-9;

// Aligned receive SNR of each device when it owns the whole band and power.
inline std::vector<double> tdma_peak_snr(const ChannelRealization& ch,
                                         const SystemConfig& cfg) {
  std::vector<double> snr(ch.num_devices());
  for (int k = 0; k < ch.num_devices(); ++k) {
    snr[k] = cfg.tx_power_w * aligned_gain_bound(ch.direct[k], ch.cascaded[k]) /
             (cfg.bandwidth_hz * cfg.noise_psd_w_per_hz);
  }
  return snr;
}

// Exact reliability and age for a slot layout. `order[j]` is the device
// transmitting j-th; `slot_s` is indexed by device. Completion times are
// running sums over positions.
inline AoiReport evaluate_tdma(const ChannelRealization& ch,
                               const std::vector<int>& order,
                               const std::vector<double>& slot_s,
                               const SystemConfig& cfg,
                               std::vector<double>* done_out = nullptr) {
  const int devices = ch.num_devices();
  const std::vector<double> snr = tdma_peak_snr(ch, cfg);
  AoiReport rep;
  rep.access = Access::tdma;
  rep.per.resize(devices);
  rep.aoi_s.resize(devices);
  if (done_out) done_out->assign(devices, 0.0);
  double elapsed = 0.0;
  for (int j = 0; j < devices; ++j) {
    const int k = order[j];
    elapsed += slot_s[k];
    double n = cfg.bandwidth_hz * slot_s[k];
    if (cfg.solver.round_blocklength) n = std::floor(n);
    n = std::max(n, 1e-300);  // a vanishing slot decodes nothing
    bool clamped = false;
    rep.per[k] = clamp_per(packet_error_rate({snr[k], n, cfg.payload_bits}), &clamped);
    rep.per_clamped = rep.per_clamped || clamped;
    rep.aoi_s[k] = aoi_tdma(rep.per[k], cfg.block_duration_s, elapsed);
    if (done_out) (*done_out)[k] = elapsed;
  }
  rep.finalize();
  return rep;
}

// Decode margin of one device owning the whole band at full power for a
// slot of length t. Strictly increasing in t, and still informative when
// the exact age has saturated at the error-rate clamp.
inline double tdma_margin(double snr, double slot_s, const SystemConfig& cfg) {
  double n = cfg.bandwidth_hz * slot_s;
  if (cfg.solver.round_blocklength) n = std::floor(n);
  if (!(n > 0.0)) return -std::numeric_limits<double>::infinity();
  const double sn = std::sqrt(n);
  return sn * std::log1p(snr) - M_LN2 * cfg.payload_bits / sn;
}

struct SlotAllocation {
  std::vector<double> slot_s;            // indexed by device
  int rounds = 0;
  int rescues = 0;                       // plateau moves kept on margin ascent
  bool hit_round_cap = false;
  bool step_floor_hit = false;           // a round ended with no acceptable step
  double final_gap_s = 0.0;              // |age(worst) - age(donor)| at exit
  std::vector<double> accepted_trace;    // worst age after init and each descent
};

// Balances slot lengths starting from the equal split. Each round picks the
// device with the worst age and the best-off donor with slack, bisects the
// time transfer that equalizes the pair (every completion time and age is
// recomputed per probe), and keeps the move only when the worst age strictly
// drops, halving the transfer otherwise. Once the error-rate clamp squashes
// the pair's ages into a tie, age equality carries no signal, so the target
// switches to the pair's decode margins, and a transfer that strictly raises
// the worst margin without hurting the worst age is kept as a rescue; that
// lets the allocator walk off an all-clamped plateau that pure descent can
// never leave. Rescues are counted apart from the descent trace. Stops when
// a descent improves by under one part in 1e4, when no step is acceptable,
// or after 200 rounds.
inline SlotAllocation allocate_slots(const ChannelRealization& ch,
                                     const std::vector<int>& order,
                                     const SystemConfig& cfg) {
  const int devices = ch.num_devices();
  SlotAllocation out;
  out.slot_s.assign(devices, cfg.block_duration_s / devices);
  if (devices == 1) return out;

  const std::vector<double> snr = tdma_peak_snr(ch, cfg);
  const auto margin = [&](int k, double t) { return tdma_margin(snr[k], t, cfg); };
  const auto min_margin = [&](const std::vector<double>& t) {
    double m = std::numeric_limits<double>::infinity();
    for (int k = 0; k < devices; ++k) m = std::min(m, margin(k, t[k]));
    return m;
  };

  double current = evaluate_tdma(ch, order, out.slot_s, cfg).max_aoi_s;
  out.accepted_trace.push_back(current);

  for (int round = 1; round <= 200; ++round) {
    out.rounds = round;
    const AoiReport rep = evaluate_tdma(ch, order, out.slot_s, cfg);
    int worst = 0;
    for (int k = 1; k < devices; ++k) {
      if (rep.aoi_s[k] > rep.aoi_s[worst] ||
          (rep.aoi_s[k] == rep.aoi_s[worst] &&
           margin(k, out.slot_s[k]) < margin(worst, out.slot_s[worst]))) {
        worst = k;
      }
    }
    int donor = -1;
    for (int k = 0; k < devices; ++k) {
      if (k == worst || out.slot_s[k] <= kSlotFloorS) continue;
      if (donor < 0 || rep.aoi_s[k] < rep.aoi_s[donor] ||
          (rep.aoi_s[k] == rep.aoi_s[donor] &&
           margin(k, out.slot_s[k]) > margin(donor, out.slot_s[donor]))) {
        donor = k;
      }
    }
    if (donor < 0) break;
    const double hi = out.slot_s[donor] - kSlotFloorS;

    // Clamped ties leave age equality degenerate; equalize margins instead.
    const bool use_margin =
        rep.aoi_s[worst] - rep.aoi_s[donor] <= 1e-9 * rep.aoi_s[worst];
    const auto pair_gap = [&](double d) {  // positive while `worst` still lags
      if (use_margin) {
        return margin(donor, out.slot_s[donor] - d) - margin(worst, out.slot_s[worst] + d);
      }
      std::vector<double> t(out.slot_s);
      t[worst] += d;
      t[donor] -= d;
      const AoiReport r = evaluate_tdma(ch, order, t, cfg);
      return r.aoi_s[worst] - r.aoi_s[donor];
    };

    double delta = hi;
    if (pair_gap(hi) < 0.0) {  // equalizing transfer lies inside (0, hi)
      double lo_d = 0.0, hi_d = hi;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo_d + hi_d);
        (pair_gap(mid) > 0.0 ? lo_d : hi_d) = mid;
      }
      delta = 0.5 * (lo_d + hi_d);
    }

    bool descended = false, rescued = false;
    double frac = 0.0;
    for (; delta >= kSlotFloorS; delta *= 0.5) {
      std::vector<double> t(out.slot_s);
      t[worst] += delta;
      t[donor] -= delta;
      const double trial = evaluate_tdma(ch, order, t, cfg).max_aoi_s;
      if (trial < current) {
        frac = (current - trial) / std::max(current, 1e-300);
        current = trial;
        out.slot_s = std::move(t);
        out.accepted_trace.push_back(current);
        descended = true;
        break;
      }
      const double before = min_margin(out.slot_s);
      if (trial <= current &&
          min_margin(t) > before + 1e-12 * std::max(1.0, std::abs(before))) {
        out.slot_s = std::move(t);
        ++out.rescues;
        rescued = true;
        break;
      }
    }
    if (!descended && !rescued) {
      out.step_floor_hit = true;
      break;
    }
    if (descended && frac < 1e-4) break;
    if (round == 200) out.hit_round_cap = true;
  }

  {
    const AoiReport rep = evaluate_tdma(ch, order, out.slot_s, cfg);
    double lo = std::numeric_limits<double>::infinity(), hi_age = 0.0;
    for (int k = 0; k < devices; ++k) {
      hi_age = std::max(hi_age, rep.aoi_s[k]);
      if (out.slot_s[k] > kSlotFloorS) lo = std::min(lo, rep.aoi_s[k]);
    }
    out.final_gap_s = std::isfinite(lo) ? hi_age - lo : 0.0;
  }
  return out;
}

struct TdmaSolution {
  std::vector<int> order;                  // order[j] = device in slot j
  std::vector<double> slot_s;              // indexed by device
  std::vector<double> done_s;              // completion time per device
  std::vector<Eigen::VectorXcd> phases;    // per-device reflection vector
  AoiReport report;
  int iterations = 0;
  std::vector<std::string> flags;
};

namespace detail {

inline std::vector<int> tdma_device_order(const ChannelRealization& ch,
                                          const SystemConfig& cfg) {
  std::vector<int> order(ch.num_devices());
  std::iota(order.begin(), order.end(), 0);
  if (cfg.solver.tdma_order == TdmaOrder::weakest_first) {
    const std::vector<double> snr = tdma_peak_snr(ch, cfg);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return snr[a] < snr[b]; });
  }
  return order;
}

inline void fill_tdma_common(TdmaSolution& sol, const ChannelRealization& ch,
                             const SystemConfig& cfg) {
  sol.phases.reserve(ch.num_devices());
  for (int k = 0; k < ch.num_devices(); ++k) {
    sol.phases.push_back(optimal_phases(ch.direct[k], ch.cascaded[k]));
    if (std::abs(ch.direct[k]) == 0.0) {
      sol.flags.push_back("zero_direct_gain_device_" + std::to_string(k));
    }
  }
  sol.report = evaluate_tdma(ch, sol.order, sol.slot_s, cfg, &sol.done_s);
  if (sol.report.per_clamped) sol.flags.push_back("per_clamped");
}

}  // namespace detail

inline TdmaSolution solve_tdma(const ChannelRealization& ch, const SystemConfig& cfg) {
  TdmaSolution sol;
  sol.order = detail::tdma_device_order(ch, cfg);
  SlotAllocation alloc = allocate_slots(ch, sol.order, cfg);
  sol.slot_s = std::move(alloc.slot_s);
  sol.iterations = alloc.rounds;
  if (alloc.hit_round_cap) sol.flags.push_back("max_rounds");
  if (alloc.rescues > 0) sol.flags.push_back("plateau_rescue");
  if (alloc.step_floor_hit) sol.flags.push_back("step_floor");
  detail::fill_tdma_common(sol, ch, cfg);
  return sol;
}

// Benchmark setup: equal slots, phases still aligned per device.
inline TdmaSolution solve_tdma_equal_baseline(const ChannelRealization& ch,
                                              const SystemConfig& cfg) {
  TdmaSolution sol;
  sol.order = detail::tdma_device_order(ch, cfg);
  sol.slot_s.assign(ch.num_devices(), cfg.block_duration_s / ch.num_devices());
  sol.iterations = 0;
  detail::fill_tdma_common(sol, ch, cfg);
  return sol;
}

}  // namespace aoisim
