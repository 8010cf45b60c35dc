#pragma once

// Passive-beamforming optimization via semidefinite relaxation.
//
// For fixed per-device bandwidth and power, the decode margin of device k
// under reflection vector v is the score
//   s_k(v) = sqrt(n_k) * ln(1 + g_k(v)) - ln2 * D / sqrt(n_k),
// an increasing function of the effective gain g_k(v) = |h_k + v^H c_k|^2.
// Maximizing min_k s_k over unit-modulus v is nonconvex; lifting to
// V = [v;1][v;1]^H relaxes it to a semidefinite feasibility family indexed
// by a trial score level: V PSD, unit diagonal, tr(R_k V) >= tau_k(level).
// A bisection over the level, a projection-based feasibility solver, and a
// Gaussian randomization rounding recover a unit-modulus solution.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoisim/channel.hpp"
#include "aoisim/config.hpp"
#include "aoisim/linalg.hpp"
#include "aoisim/rng.hpp"

namespace aoisim {

struct LiftedProblem {
  std::vector<Eigen::MatrixXcd> constraint;        // R_k, (M+1)x(M+1) Hermitian
  std::vector<std::complex<double>> direct;        // h_k
  std::vector<Eigen::VectorXcd> cascaded;          // c_k
  std::vector<double> snr_coeff;                   // g -> snr: snr = coeff * g
  std::vector<double> sqrt_blocklength;            // sqrt(n_k)
  double payload_bits = 0.0;
  int elements = 0;

  int num_devices() const { return static_cast<int>(constraint.size()); }

  // Decode-margin score of device k at effective gain g.
  double score_of_gain(int k, double gain) const {
    const double sn = sqrt_blocklength[k];
    return sn * std::log1p(snr_coeff[k] * gain) - M_LN2 * payload_bits / sn;
  }

  // Effective gain needed for device k to reach `score`; +inf if the
  // required SNR overflows, which any caller treats as unattainable.
  double gain_needed(int k, double score) const {
    const double sn = sqrt_blocklength[k];
    const double arg = (score + M_LN2 * payload_bits / sn) / sn;
    if (arg > 700.0) return std::numeric_limits<double>::infinity();
    return std::expm1(arg) / snr_coeff[k];
  }

  // Right-hand side for the lifted constraint tr(R_k V) >= tau_k(score).
  double tau(int k, double score) const {
    return gain_needed(k, score) - std::norm(direct[k]);
  }

  // Largest tr(R_k V) over PSD V with unit diagonal; reached by the
  // phase-aligned rank-one point, so it doubles as the per-device score cap.
  double trace_bound(int k) const {
    const double csum = cascaded[k].cwiseAbs().sum();
    return csum * csum + 2.0 * std::abs(direct[k]) * csum;
  }

  double max_score(int k) const {
    return score_of_gain(k, aligned_gain_bound(direct[k], cascaded[k]));
  }

  // Cap on the achievable min score: no level above the weakest device's
  // fully aligned score is feasible, even for the relaxation.
  double score_upper() const {
    double s = std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_devices(); ++k) s = std::min(s, max_score(k));
    return s;
  }

  double score_at(int k, const Eigen::VectorXcd& v) const {
    return score_of_gain(k, effective_gain(direct[k], cascaded[k], v));
  }

  double min_score_at(const Eigen::VectorXcd& v) const {
    double s = std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_devices(); ++k) s = std::min(s, score_at(k, v));
    return s;
  }

  // Lifted rank-one matrix of a unit-modulus v, for warm starts.
  Eigen::MatrixXcd lift(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd ext(elements + 1);
    ext.head(elements) = v;
    ext[elements] = 1.0;
    return ext * ext.adjoint();
  }
};

// Assembles the lifted constraint data for the given per-device bandwidth
// and power split. Blocklength is bandwidth * block duration, optionally
// floored to whole channel uses.
inline LiftedProblem build_lifted(const ChannelRealization& ch,
                                  const std::vector<double>& bandwidth_hz,
                                  const std::vector<double>& power_w,
                                  const SystemConfig& cfg) {
  const int devices = ch.num_devices();
  if (static_cast<int>(bandwidth_hz.size()) != devices ||
      static_cast<int>(power_w.size()) != devices) {
    throw std::invalid_argument("build_lifted: allocation size does not match devices");
  }
  LiftedProblem p;
  p.elements = ch.num_elements();
  p.payload_bits = cfg.payload_bits;
  p.direct = ch.direct;
  p.cascaded = ch.cascaded;
  p.constraint.reserve(devices);
  for (int k = 0; k < devices; ++k) {
    if (!(bandwidth_hz[k] > 0.0) || !(power_w[k] > 0.0)) {
      throw std::invalid_argument("build_lifted: bandwidth and power must be positive");
    }
    double n = bandwidth_hz[k] * cfg.block_duration_s;
    if (cfg.solver.round_blocklength) n = std::floor(n);
    if (!(n > 0.0)) {
      throw std::invalid_argument("build_lifted: blocklength vanished for device " +
                                  std::to_string(k));
    }
    p.sqrt_blocklength.push_back(std::sqrt(n));
    p.snr_coeff.push_back(power_w[k] / (bandwidth_hz[k] * cfg.noise_psd_w_per_hz));

    const int m = p.elements;
    const auto& c = ch.cascaded[k];
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    r.topLeftCorner(m, m) = c * c.adjoint();
    r.topRightCorner(m, 1) = c * std::conj(ch.direct[k]);
    r.bottomLeftCorner(1, m) = ch.direct[k] * c.adjoint();
    p.constraint.push_back(std::move(r));
  }
  return p;
}

struct FeasibilityOptions {
  int max_sweeps = 5000;
  double tol = 1e-6;              // accepted relative violation
  int stagnation_window = 200;    // sweeps between progress checkpoints
  double stagnation_delta = 1e-9; // absolute progress floor per window
};

struct FeasibilityResult {
  bool feasible = false;
  bool screened = false;   // rejected analytically, no iterations run
  bool stalled = false;    // gave up on stagnation or the sweep cap
  double residual = std::numeric_limits<double>::infinity();
  int sweeps = 0;
  Eigen::MatrixXcd V;
};

namespace detail {

// Real Frobenius inner product <A, B> = Re tr(A^H B); equals tr(A B) for
// Hermitian A, B. Avoids forming the matrix product just for its trace.
inline double real_inner(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

// Largest relative violation of the lifted constraints at V. The PSD part
// compares the most negative eigenvalue against the largest one; halfspace
// parts are scaled by each tau's own magnitude.
inline double lifted_residual(const LiftedProblem& p, const std::vector<double>& tau,
                              const Eigen::MatrixXcd& v_mat,
                              const Eigen::VectorXd& eig_values) {
  double res = 0.0;
  for (int k = 0; k < p.num_devices(); ++k) {
    const double t = real_inner(p.constraint[k], v_mat);
    const double scale = std::max(1.0, std::abs(tau[k]));
    res = std::max(res, (tau[k] - t) / scale);
  }
  for (Eigen::Index i = 0; i < v_mat.rows(); ++i) {
    res = std::max(res, std::abs(std::real(v_mat(i, i)) - 1.0));
  }
  const double top = std::max(1.0, eig_values.size() ? eig_values[0] : 0.0);
  const double bottom = eig_values.size() ? eig_values[eig_values.size() - 1] : 0.0;
  res = std::max(res, -bottom / top);
  return res;
}

}  // namespace detail

// Decides whether some PSD unit-diagonal V satisfies tr(R_k V) >= tau_k(score)
// for all k, by Dykstra-corrected cyclic projections onto the halfspaces,
// the unit-diagonal affine set, and the PSD cone. Returns the iterate either
// way; an infeasible verdict means the residual stalled, not a certificate.
inline FeasibilityResult psd_feasible(const LiftedProblem& p, double score,
                                      const FeasibilityOptions& opts = {},
                                      const Eigen::MatrixXcd* warm_start = nullptr) {
  const int dim = p.elements + 1;
  const int devices = p.num_devices();
  FeasibilityResult out;

  std::vector<double> tau(devices);
  for (int k = 0; k < devices; ++k) {
    tau[k] = p.tau(k, score);
    if (tau[k] > p.trace_bound(k) * (1.0 + 1e-12) + 1e-12) {
      // Even the best rank-one point cannot satisfy device k at this level.
      out.screened = true;
      out.V = Eigen::MatrixXcd::Identity(dim, dim);
      return out;
    }
  }

  Eigen::MatrixXcd v_mat =
      warm_start ? *warm_start : Eigen::MatrixXcd::Identity(dim, dim);
  if (v_mat.rows() != dim || v_mat.cols() != dim) {
    throw std::invalid_argument("psd_feasible: warm start has wrong dimensions");
  }

  std::vector<double> r_norm_sq(devices);
  for (int k = 0; k < devices; ++k) {
    r_norm_sq[k] = p.constraint[k].squaredNorm();
  }

  // Dykstra correction terms, one per projection in the cycle.
  std::vector<Eigen::MatrixXcd> corr(devices + 2,
                                     Eigen::MatrixXcd::Zero(dim, dim));

  double best_residual = std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd best_v = v_mat;
  double anchor_residual = std::numeric_limits<double>::infinity();
  int anchor_sweep = 0;
  double window_decay[3] = {1.0, 1.0, 1.0};
  int windows_done = 0;
  Eigen::VectorXd eig_values;

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (int k = 0; k < devices; ++k) {
      if (r_norm_sq[k] <= 0.0) continue;
      Eigen::MatrixXcd y = v_mat + corr[k];
      const double gap = tau[k] - detail::real_inner(p.constraint[k], y);
      if (gap > 0.0) {
        v_mat = y + (gap / r_norm_sq[k]) * p.constraint[k];
      } else {
        v_mat = y;
      }
      corr[k] = y - v_mat;
    }
    {
      Eigen::MatrixXcd y = v_mat + corr[devices];
      v_mat = 0.5 * (y + y.adjoint());
      v_mat.diagonal().setOnes();
      corr[devices] = y - v_mat;
    }
    {
      Eigen::MatrixXcd y = v_mat + corr[devices + 1];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (y + y.adjoint()));
      if (es.info() != Eigen::Success) {
        throw std::runtime_error("psd_feasible: eigensolver failed");
      }
      const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
      v_mat = es.eigenvectors() * clamped.asDiagonal() *
              es.eigenvectors().adjoint();
      corr[devices + 1] = y - v_mat;
      eig_values = clamped.reverse();  // descending, all nonnegative
    }

    out.sweeps = sweep;
    const double res = detail::lifted_residual(p, tau, v_mat, eig_values);
    if (res <= opts.tol) {
      out.feasible = true;
      out.residual = res;
      out.V = v_mat;
      return out;
    }
    if (res < best_residual) {
      best_residual = res;
      best_v = v_mat;
    }
    if (sweep == 1) {
      anchor_residual = res;
      anchor_sweep = 1;
      continue;
    }
    // Progress checkpoints. Give up once the remaining sweeps cannot close
    // the gap to tol even at the fastest per-window residual decay of the
    // last three windows; the lookback shields runs whose early transient
    // masks later acceleration, while flat windows (no resolvable progress)
    // stall immediately. Either way the verdict stays heuristic, with the
    // residual kept for audit.
    if (sweep - anchor_sweep >= opts.stagnation_window) {
      const double decay =
          std::max(best_residual / anchor_residual, 1e-300);
      window_decay[windows_done % 3] = decay;
      ++windows_done;
      const double rate = *std::min_element(
          window_decay, window_decay + std::min(windows_done, 3));
      const double windows_left =
          static_cast<double>(opts.max_sweeps - sweep) / opts.stagnation_window;
      const bool flat = anchor_residual - best_residual < opts.stagnation_delta;
      const bool hopeless = std::log(best_residual) +
                                windows_left * std::log(rate) >
                            std::log(opts.tol);
      if (flat || hopeless) {
        out.stalled = true;
        break;
      }
      anchor_residual = best_residual;
      anchor_sweep = sweep;
    }
  }
  if (!out.stalled) out.stalled = true;  // sweep cap counts as a stall too
  out.residual = best_residual;
  out.V = best_v;
  return out;
}

struct BisectionTraceRow {
  double score = 0.0;
  bool feasible = false;
  double residual = 0.0;
  int sweeps = 0;
  bool screened = false;
};

struct ScoreBisection {
  double best_feasible = 0.0;       // largest level with a confirmed PSD point
  double upper_bound = 0.0;         // smallest level known or declared infeasible
  Eigen::MatrixXcd V;               // iterate at best_feasible
  bool from_incumbent = false;      // no probe beat the initialization level
  bool degenerate = false;          // initialization already meets the analytic cap
  int feasibility_calls = 0;
  std::vector<BisectionTraceRow> trace;
};

// Maximizes the relaxed min score by bisection. The bracket starts from the
// best rank-one point known up front: the incumbent reflection vector plus
// each device's aligned phases, every one feasible by construction (its own
// lifted matrix is a certificate). That keeps the search valid even when all
// achievable scores are negative, and when one device's aligned setting
// already satisfies the others (the common near-tight case) it closes the
// bracket without a single projection probe. Probes stop when the bracket
// shrinks below tol_rel * max(1, |analytic cap|).
inline ScoreBisection bisect_score(const LiftedProblem& p,
                                   const Eigen::VectorXcd& incumbent,
                                   const FeasibilityOptions& opts = {},
                                   double tol_rel = 1e-4) {
  if (p.elements < 1) {
    throw std::invalid_argument("bisect_score: no reflecting elements to optimize");
  }
  ScoreBisection out;
  const double cap = p.score_upper();
  double lo = p.min_score_at(incumbent);
  out.V = p.lift(incumbent);
  const int devices = p.num_devices();
  std::vector<Eigen::VectorXcd> ext(devices);
  for (int k = 0; k < devices; ++k) {
    Eigen::VectorXcd e(p.elements + 1);
    e.head(p.elements) = optimal_phases(p.direct[k], p.cascaded[k]);
    e[p.elements] = 1.0;
    ext[k] = e;
    const double s = p.min_score_at(e.head(p.elements));
    if (s > lo) {
      lo = s;
      out.V = ext[k] * ext[k].adjoint();
    }
  }
  // Convex mixtures of the aligned lifts keep the unit diagonal and stay
  // positive semidefinite, so any mixture level is a certified floor for
  // the bisection before a single projection run. A coarse simplex sweep
  // with pairwise mass-shift polish lifts that floor well above the best
  // single candidate whenever devices pull the phases apart.
  if (devices >= 2) {
    Eigen::MatrixXd mix_gain(devices, devices);
    for (int j = 0; j < devices; ++j) {
      for (int k = 0; k < devices; ++k) {
        mix_gain(j, k) = std::real(ext[k].dot(p.constraint[j] * ext[k]));
      }
    }
    const auto mix_level = [&](const Eigen::VectorXd& w) {
      double s = std::numeric_limits<double>::infinity();
      for (int j = 0; j < devices; ++j) {
        s = std::min(s, p.score_of_gain(j, std::norm(p.direct[j]) +
                                               mix_gain.row(j).dot(w)));
      }
      return s;
    };
    const int denom = devices <= 5 ? 16 : 8;
    Eigen::VectorXd best_w = Eigen::VectorXd::Zero(devices);
    double best_level = -std::numeric_limits<double>::infinity();
    std::vector<int> m(devices, 0);
    const auto enumerate = [&](auto&& self, int idx, int left) -> void {
      if (idx == devices - 1) {
        m[idx] = left;
        Eigen::VectorXd w(devices);
        for (int k = 0; k < devices; ++k) w[k] = static_cast<double>(m[k]) / denom;
        const double s = mix_level(w);
        if (s > best_level) {
          best_level = s;
          best_w = w;
        }
        return;
      }
      for (int t = 0; t <= left; ++t) {
        m[idx] = t;
        self(self, idx + 1, left - t);
      }
    };
    enumerate(enumerate, 0, denom);
    for (const double step : {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256}) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (int a = 0; a < devices; ++a) {
          if (best_w[a] < step - 1e-12) continue;
          for (int b = 0; b < devices; ++b) {
            if (b == a) continue;
            Eigen::VectorXd trial = best_w;
            trial[a] -= step;
            trial[b] += step;
            const double s = mix_level(trial);
            if (s > best_level) {
              best_level = s;
              best_w = trial;
              moved = true;
            }
          }
        }
      }
    }
    if (best_level > lo) {
      lo = best_level;
      Eigen::MatrixXcd vm =
          Eigen::MatrixXcd::Zero(p.elements + 1, p.elements + 1);
      for (int k = 0; k < devices; ++k) {
        if (best_w[k] > 0.0) vm.noalias() += best_w[k] * (ext[k] * ext[k].adjoint());
      }
      out.V = vm;
    }
  }
  double hi = cap;
  out.from_incumbent = true;

  const double tol = tol_rel * std::max(1.0, std::abs(cap));
  if (hi - lo <= tol) {
    out.best_feasible = lo;
    out.upper_bound = hi;
    out.degenerate = true;
    return out;
  }

  Eigen::MatrixXcd warm = out.V;
  for (int it = 0; it < 64 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const FeasibilityResult fr = psd_feasible(p, mid, opts, &warm);
    ++out.feasibility_calls;
    out.trace.push_back({mid, fr.feasible, fr.residual, fr.sweeps, fr.screened});
    if (fr.feasible) {
      lo = mid;
      out.V = fr.V;
      warm = fr.V;
      out.from_incumbent = false;
    } else {
      hi = mid;
      if (!fr.screened) warm = fr.V;  // stalled iterate still helps nearby probes
    }
  }
  out.best_feasible = lo;
  out.upper_bound = hi;
  return out;
}

inline void write_trace_csv(const std::string& path,
                            const std::vector<BisectionTraceRow>& rows) {
  std::ofstream outf(path);
  if (!outf) throw std::runtime_error("cannot open trace file: " + path);
  outf << "score,feasible,residual,sweeps,screened\n";
  for (const auto& r : rows) {
    outf << r.score << ',' << (r.feasible ? 1 : 0) << ',' << r.residual << ','
         << r.sweeps << ',' << (r.screened ? 1 : 0) << '\n';
  }
}

struct BeamformingSolution {
  Eigen::VectorXcd v;        // unit-modulus reflection coefficients
  double min_score = 0.0;    // min_k s_k(v)
  double rank_ratio = 0.0;   // second eigenvalue over first, 0 when rank one
};

/// Rounds a lifted PSD iterate to unit-modulus coefficients: the principal
// eigenvector plus `draws` Gaussian samples shaped by V, each normalized to
// the reference (last) coordinate and projected elementwise to the unit
// circle. Returns the candidate with the best min score.
inline BeamformingSolution gaussian_randomize(const Eigen::MatrixXcd& v_mat,
                                              const LiftedProblem& p, int draws,
                                              Rng& rng) {
  const int dim = p.elements + 1;
  if (v_mat.rows() != dim || v_mat.cols() != dim) {
    throw std::invalid_argument("gaussian_randomize: matrix size does not match problem");
  }
  const HermitianEig eig = hermitian_eig(0.5 * (v_mat + v_mat.adjoint()));
  const Eigen::VectorXd w = eig.values.cwiseMax(0.0);

  BeamformingSolution best;
  best.min_score = -std::numeric_limits<double>::infinity();
  if (w[0] > 0.0 && eig.values.size() > 1) {
    best.rank_ratio = std::max(0.0, eig.values[1]) / w[0];
  }

  const auto consider = [&](const Eigen::VectorXcd& lifted) {
    std::complex<double> ref = lifted[dim - 1];
    if (std::abs(ref) <= 0.0) ref = 1.0;
    ref /= std::abs(ref);
    Eigen::VectorXcd v(p.elements);
    for (int m = 0; m < p.elements; ++m) {
      std::complex<double> z = lifted[m] * std::conj(ref);
      const double mag = std::abs(z);
      v[m] = mag > 0.0 ? z / mag : std::complex<double>(1.0, 0.0);
    }
    const double s = p.min_score_at(v);
    if (s > best.min_score) {
      best.min_score = s;
      best.v = std::move(v);
    }
  };

  consider(eig.vectors.col(0));

  const Eigen::MatrixXcd shaper =
      eig.vectors * w.cwiseSqrt().asDiagonal();
  Eigen::VectorXcd z(dim);
  for (int d = 0; d < draws; ++d) {
    for (int i = 0; i < dim; ++i) z[i] = rng.complex_normal();
    consider(shaper * z);
  }
  return best;
}

}  // namespace aoisim
