#include <catch2/catch_amalgamated.hpp>

#include "aoisim/sdr.hpp"

using namespace aoisim;

namespace {

// Small synthetic setup with decodable links: two devices, adjustable
// element count, equal resource split.
struct Setup {
  ChannelRealization ch;
  SystemConfig cfg;
  LiftedProblem lifted;
};

Setup make_setup(int elements, std::uint64_t seed, double payload = 100.0) {
  Setup s;
  s.cfg.num_devices = 2;
  s.cfg.num_elements = elements;
  s.cfg.payload_bits = payload;
  Rng placement(derive_seed(seed, Stream::placement, 0, 0));
  Rng fading(derive_seed(seed, Stream::fading, 0, 0));
  const auto pts = place_devices(s.cfg, placement);
  s.ch = sample_channels(s.cfg, pts, fading);
  const std::vector<double> bw(2, s.cfg.bandwidth_hz / 2);
  const std::vector<double> pw(2, s.cfg.tx_power_w / 2);
  s.lifted = build_lifted(s.ch, bw, pw, s.cfg);
  return s;
}

}  // namespace

TEST_CASE("lifted trace reproduces the effective gain", "[sdr]") {
  const Setup s = make_setup(5, 11);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXcd v(5);
    for (int m = 0; m < 5; ++m) v[m] = std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
    const Eigen::MatrixXcd lift = s.lifted.lift(v);
    for (int k = 0; k < 2; ++k) {
      const double via_trace =
          (s.lifted.constraint[k].cwiseProduct(lift.conjugate())).sum().real() +
          std::norm(s.ch.direct[k]);
      const double direct = effective_gain(s.ch.direct[k], s.ch.cascaded[k], v);
      REQUIRE(via_trace == Catch::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("score and required gain invert each other", "[sdr]") {
  const Setup s = make_setup(3, 21);
  for (double score : {-5.0, 0.0, 3.0, 20.0}) {
    for (int k = 0; k < 2; ++k) {
      const double g = s.lifted.gain_needed(k, score);
      REQUIRE(std::isfinite(g));
      REQUIRE(s.lifted.score_of_gain(k, g) == Catch::Approx(score).margin(1e-9));
    }
  }
}

TEST_CASE("constraint matrices are hermitian with zero corner", "[sdr]") {
  const Setup s = make_setup(4, 33);
  for (const auto& r : s.lifted.constraint) {
    REQUIRE(hermitian_defect(r) < 1e-14 * r.norm());
    REQUIRE(std::abs(r(4, 4)) == 0.0);
  }
}

TEST_CASE("levels above the aligned cap are screened out instantly", "[sdr]") {
  const Setup s = make_setup(3, 44);
  const double cap = s.lifted.score_upper();
  const FeasibilityResult fr = psd_feasible(s.lifted, cap + 10.0);
  REQUIRE(fr.screened);
  REQUIRE_FALSE(fr.feasible);
  REQUIRE(fr.sweeps == 0);
}

TEST_CASE("levels at the incumbent are feasible with a certificate", "[sdr]") {
  const Setup s = make_setup(4, 55);
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(4);
  const double level = s.lifted.min_score_at(ones);
  const Eigen::MatrixXcd warm = s.lifted.lift(ones);
  const FeasibilityResult fr = psd_feasible(s.lifted, level - 1e-6, {}, &warm);
  REQUIRE(fr.feasible);
  REQUIRE(fr.residual <= 1e-6);
  REQUIRE(fr.sweeps <= 5);
}

TEST_CASE("bisection brackets the relaxed optimum", "[sdr]") {
  const Setup s = make_setup(3, 66);
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(3);
  const ScoreBisection bis = bisect_score(s.lifted, ones);
  REQUIRE(bis.best_feasible >= s.lifted.min_score_at(ones) - 1e-12);
  REQUIRE(bis.upper_bound >= bis.best_feasible);
  REQUIRE(bis.upper_bound <= s.lifted.score_upper() + 1e-12);
  REQUIRE(bis.feasibility_calls == static_cast<int>(bis.trace.size()));
  // Probes never leave the initial bracket.
  for (const auto& row : bis.trace) {
    REQUIRE(row.score >= s.lifted.min_score_at(ones) - 1e-9);
    REQUIRE(row.score <= s.lifted.score_upper() + 1e-9);
  }
}

TEST_CASE("bisection without elements is rejected", "[sdr]") {
  const Setup s = make_setup(2, 77);
  LiftedProblem p = s.lifted;
  p.elements = 0;
  REQUIRE_THROWS_AS(bisect_score(p, Eigen::VectorXcd()), std::invalid_argument);
}

TEST_CASE("randomization returns unit-modulus coefficients", "[sdr]") {
  const Setup s = make_setup(4, 88);
  const ScoreBisection bis = bisect_score(s.lifted, Eigen::VectorXcd::Ones(4));
  Rng rng(9);
  const BeamformingSolution sol = gaussian_randomize(bis.V, s.lifted, 50, rng);
  REQUIRE(sol.v.size() == 4);
  for (int m = 0; m < 4; ++m) {
    REQUIRE(std::abs(sol.v[m]) == Catch::Approx(1.0).epsilon(1e-12));
  }
  REQUIRE(sol.min_score == Catch::Approx(s.lifted.min_score_at(sol.v)).epsilon(1e-12));
  REQUIRE(sol.rank_ratio >= 0.0);
}

TEST_CASE("randomization is deterministic under a fixed seed", "[sdr]") {
  const Setup s = make_setup(3, 99);
  const ScoreBisection bis = bisect_score(s.lifted, Eigen::VectorXcd::Ones(3));
  Rng r1(17), r2(17);
  const BeamformingSolution a = gaussian_randomize(bis.V, s.lifted, 64, r1);
  const BeamformingSolution b = gaussian_randomize(bis.V, s.lifted, 64, r2);
  REQUIRE(a.min_score == b.min_score);
  REQUIRE(a.v == b.v);
}

TEST_CASE("single-device beamforming approaches the aligned bound", "[sdr]") {
  SystemConfig cfg;
  cfg.num_devices = 1;
  cfg.num_elements = 6;
  cfg.payload_bits = 100;
  Rng placement(derive_seed(5, Stream::placement, 0, 0));
  Rng fading(derive_seed(5, Stream::fading, 0, 0));
  const ChannelRealization ch = sample_channels(cfg, place_devices(cfg, placement), fading);
  const LiftedProblem lifted = build_lifted(ch, {cfg.bandwidth_hz}, {cfg.tx_power_w}, cfg);

  const ScoreBisection bis = bisect_score(lifted, Eigen::VectorXcd::Ones(6));
  Rng rng(4);
  const BeamformingSolution sol = gaussian_randomize(bis.V, lifted, 200, rng);
  // One constraint: the relaxation is tight and rounding recovers alignment.
  REQUIRE(sol.min_score >= 0.999 * lifted.score_upper() -
                               1e-4 * std::abs(lifted.score_upper()) - 1e-6);
}

TEST_CASE("allocation size mismatches are rejected", "[sdr]") {
  const Setup s = make_setup(2, 13);
  const std::vector<double> bad(3, 1.0);
  const std::vector<double> good(2, 1.0);
  REQUIRE_THROWS_AS(build_lifted(s.ch, bad, good, s.cfg), std::invalid_argument);
  REQUIRE_THROWS_AS(build_lifted(s.ch, {1e5, -1.0}, good, s.cfg), std::invalid_argument);
}
