#include <catch2/catch_amalgamated.hpp>

#include "aoisim/channel.hpp"

using namespace aoisim;

TEST_CASE("power-law pathloss matches precomputed references", "[channel]") {
  // High-precision references computed independently.
  REQUIRE(pathloss(120.0, 3.5, 1e-3) ==
          Catch::Approx(5.2828178771717412e-11).epsilon(1e-12));
  REQUIRE(pathloss(100.0, 2.0, 1e-3) == Catch::Approx(1e-7).epsilon(1e-12));
  REQUIRE(pathloss(1.0, 3.5, 1e-3) == Catch::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("pathloss rejects degenerate geometry", "[channel]") {
  REQUIRE_THROWS_AS(pathloss(0.0, 3.5, 1e-3), std::invalid_argument);
  REQUIRE_THROWS_AS(pathloss(-5.0, 3.5, 1e-3), std::invalid_argument);
  REQUIRE_THROWS_AS(pathloss(10.0, -1.0, 1e-3), std::invalid_argument);
  REQUIRE_THROWS_AS(pathloss(10.0, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("devices land uniformly on the disc", "[channel]") {
  SystemConfig cfg;
  cfg.num_devices = 20000;
  Rng rng(31);
  const auto pts = place_devices(cfg, rng);
  double mean_r = 0.0;
  for (const auto& p : pts) {
    const double r = distance(p, cfg.device_center);
    REQUIRE(r <= cfg.device_radius_m + 1e-9);
    mean_r += r;
  }
  mean_r /= pts.size();
  // Uniform area density gives E[r] = 2R/3.
  REQUIRE(mean_r == Catch::Approx(2.0 * cfg.device_radius_m / 3.0).margin(0.1));
}

TEST_CASE("disabled fading reduces gains to pure pathloss", "[channel]") {
  SystemConfig cfg;
  cfg.num_devices = 2;
  cfg.num_elements = 4;
  cfg.fading = false;
  Rng rng(5);
  const auto pts = place_devices(cfg, rng);
  const ChannelRealization ch = sample_channels(cfg, pts, rng);
  for (int k = 0; k < 2; ++k) {
    const double expected = std::sqrt(
        pathloss(distance(cfg.ap_pos, pts[k]), cfg.alpha_direct, cfg.pathloss_ref));
    REQUIRE(std::abs(ch.direct[k]) == Catch::Approx(expected).epsilon(1e-12));
    REQUIRE(ch.direct[k].imag() == 0.0);

    const double amp_ar = std::sqrt(pathloss(distance(cfg.ap_pos, cfg.irs_pos),
                                             cfg.alpha_ap_irs, cfg.pathloss_ref));
    const double amp_r = std::sqrt(
        pathloss(distance(cfg.irs_pos, pts[k]), cfg.alpha_irs_dev, cfg.pathloss_ref));
    for (int m = 0; m < 4; ++m) {
      REQUIRE(std::abs(ch.cascaded[k][m]) ==
              Catch::Approx(amp_ar * amp_r).epsilon(1e-12));
      REQUIRE(ch.cascaded[k][m].imag() == 0.0);
    }
  }
}

TEST_CASE("fading is unit-variance on the direct link", "[channel]") {
  SystemConfig cfg;
  cfg.num_devices = 1;
  cfg.num_elements = 0;
  Rng placement(7);
  const auto pts = place_devices(cfg, placement);
  const double loss =
      pathloss(distance(cfg.ap_pos, pts[0]), cfg.alpha_direct, cfg.pathloss_ref);

  Rng fading(8);
  double mean_power = 0.0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    const ChannelRealization ch = sample_channels(cfg, pts, fading);
    mean_power += std::norm(ch.direct[0]);
  }
  mean_power /= trials;
  REQUIRE(mean_power == Catch::Approx(loss).epsilon(0.02));
}

TEST_CASE("effective gain follows the adjoint combining rule", "[channel]") {
  // h = 1, c = [i], v = [i]: v^H c = conj(i) * i = 1, so |1 + 1|^2 = 4.
  Eigen::VectorXcd c(1), v(1);
  c[0] = std::complex<double>(0.0, 1.0);
  v[0] = std::complex<double>(0.0, 1.0);
  REQUIRE(effective_gain({1.0, 0.0}, c, v) == Catch::Approx(4.0).epsilon(1e-12));

  // Anti-aligned setting cancels the direct path.
  v[0] = std::complex<double>(0.0, -1.0);
  REQUIRE(effective_gain({1.0, 0.0}, c, v) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("effective gain validates dimensions", "[channel]") {
  Eigen::VectorXcd c(3), v(2);
  c.setOnes();
  v.setOnes();
  REQUIRE_THROWS_AS(effective_gain({1.0, 0.0}, c, v), std::invalid_argument);
}

TEST_CASE("sampling validates the position count", "[channel]") {
  SystemConfig cfg;
  cfg.num_devices = 3;
  Rng rng(1);
  std::vector<Vec2> two(2, Vec2{120.0, 0.0});
  REQUIRE_THROWS_AS(sample_channels(cfg, two, rng), std::invalid_argument);
}

TEST_CASE("sampling is deterministic given the rng state", "[channel]") {
  SystemConfig cfg;
  cfg.num_devices = 3;
  cfg.num_elements = 8;
  Rng p1(42), p2(42);
  const auto pos1 = place_devices(cfg, p1);
  const auto pos2 = place_devices(cfg, p2);
  Rng f1(43), f2(43);
  const ChannelRealization a = sample_channels(cfg, pos1, f1);
  const ChannelRealization b = sample_channels(cfg, pos2, f2);
  for (int k = 0; k < 3; ++k) {
    REQUIRE(a.direct[k] == b.direct[k]);
    REQUIRE(a.cascaded[k] == b.cascaded[k]);
  }
}
