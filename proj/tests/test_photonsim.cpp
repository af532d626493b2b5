// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "satlink/photonsim.hpp"
#include "test_support.hpp"

using namespace satlink;
using testing::champ_channel;
using testing::champ_sim;

namespace {

const RangeModel& champ_model() {
  static const RangeModel model =
      fit_range(synth_pass(330e3, 7700.0, 28.0, 15.0, 0.1), 4);
  return model;
}

}  // namespace

TEST_CASE("chopper gate windows") {
  const auto cfg = champ_sim();
  CHECK(chopper_open(cfg, 1.0e-3));
  CHECK_FALSE(chopper_open(cfg, 2.0e-3));
  CHECK(chopper_open(cfg, 16.0e-3 + 1.0e-3));
  CHECK_FALSE(chopper_open(cfg, 16.0e-3 + 2.0e-3));

  // Transmit window is the second half of the period minus the guard.
  CHECK_FALSE(transmit_open(cfg, 1.0e-3));
  CHECK(transmit_open(cfg, 9.0e-3));
  CHECK(transmit_open(cfg, 15.7e-3));
  CHECK_FALSE(transmit_open(cfg, 15.9e-3));

  auto shifted = cfg;
  shifted.chopper_phase_s = 3.0e-3;
  CHECK_FALSE(chopper_open(shifted, 1.0e-3));
  CHECK(chopper_open(shifted, 4.0e-3));
}

TEST_CASE("chopper duty via Monte Carlo") {
  const auto cfg = champ_sim();
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const int n = 1'000'000;
  int open = 0;
  for (int i = 0; i < n; ++i) {
    if (chopper_open(cfg, u(eng))) ++open;
  }
  CHECK(std::abs(static_cast<double>(open) / n - 0.103125) < 1e-3);
}

TEST_CASE("compose_jitter sums FWHM terms in quadrature") {
  const double comps[] = {350e-12, 160e-12, 1000e-12, 821e-12};
  CHECK(std::abs(compose_jitter(comps) - 1350e-12) < 1e-12);

  const double single[] = {417e-12};
  CHECK(compose_jitter(single) == 417e-12);
  CHECK(compose_jitter({}) == 0.0);

  const double bad[] = {-1e-12};
  CHECK_THROWS_AS(compose_jitter(bad), InvalidParameterError);
}

TEST_CASE("sim config validation") {
  CHECK_NOTHROW(validate_sim_config(champ_sim()));
  CHECK(duty_fraction(champ_sim()) == doctest::Approx(0.103125));

  auto cfg = champ_sim();
  cfg.chopper_open_s = 20e-3;  // wider than the period
  CHECK_THROWS_WITH_AS(validate_sim_config(cfg),
                       doctest::Contains("chopper_open_s"),
                       InvalidParameterError);

  cfg = champ_sim();
  cfg.tdc_resolution_s = 0.5e-12;  // not a whole picosecond
  CHECK_THROWS_AS(validate_sim_config(cfg), InvalidParameterError);

  cfg = champ_sim();
  cfg.jitter_fwhm_components_s.push_back(-2e-12);
  CHECK_THROWS_AS(validate_sim_config(cfg), InvalidParameterError);

  cfg = champ_sim();
  cfg.duration_s = 0.0;
  CHECK_THROWS_AS(validate_sim_config(cfg), InvalidParameterError);
}

TEST_CASE("deterministic limit: every pulse yields exactly one tag") {
  auto cfg = champ_sim(1, 1e-3);
  cfg.channel.pulse_energy_j = 1.0;  // detection probability saturates at 1
  cfg.chopper_open_s = cfg.chopper_period_s;  // gating disabled
  cfg.background_rate_cps = 0.0;
  cfg.jitter_fwhm_components_s.clear();

  const auto tags = simulate_pass(cfg, champ_model());
  const auto expected =
      static_cast<std::size_t>(std::floor(cfg.duration_s * cfg.channel.pulse_rate_hz));
  REQUIRE(tags.size() == expected);

  // Every tag sits at the quantized arrival of its own slot.
  for (std::size_t k = 0; k < tags.size(); ++k) {
    const double t0 = static_cast<double>(k) / cfg.channel.pulse_rate_hz;
    const double arrival = t0 + roundtrip_at(champ_model(), t0);
    const auto expected_ps =
        static_cast<std::uint64_t>(std::floor(arrival * 1e12));
    CHECK(tags[k].timestamp_ps == expected_ps);
  }
}

TEST_CASE("gated signal count matches the analytic rate") {
  auto cfg = champ_sim(40191);
  cfg.background_rate_cps = 0.0;
  const auto tags = simulate_pass(cfg, champ_model());

  const double n = expected_detections_per_pulse(cfg.channel);
  const double p = -std::expm1(-n);
  const double mean =
      p * cfg.channel.pulse_rate_hz * duty_fraction(cfg) * cfg.duration_s;
  CHECK(std::abs(static_cast<double>(tags.size()) - mean) <
        3.0 * std::sqrt(mean));
  // One 10 s realization of the reference pass gave 5385 echoes; the model
  // should land within a few percent.
  CHECK(std::abs(static_cast<double>(tags.size()) - 5385.0) <
        0.05 * 5385.0);
  CHECK(std::abs(static_cast<double>(tags.size()) - 5310.0) <
        3.0 * std::sqrt(5310.0));
}

TEST_CASE("background-only count matches the gated live time") {
  auto cfg = champ_sim(7);
  cfg.channel.pulse_energy_j = 1e-30;  // signal mean ~3e-26 per pulse
  cfg.background_rate_cps = 89.0;
  const auto tags = simulate_pass(cfg, champ_model());
  const double mean = 89.0 * duty_fraction(cfg) * cfg.duration_s;  // 91.8
  CHECK(std::abs(static_cast<double>(tags.size()) - mean) <
        3.0 * std::sqrt(mean));
}

TEST_CASE("streams are deterministic and thread-count independent") {
  const auto cfg = champ_sim(123, 2.0);
  const auto once = simulate_pass(cfg, champ_model());
  const auto twice = simulate_pass(cfg, champ_model());
  CHECK(once == twice);

  SimulateOptions four;
  four.threads = 4;
  CHECK(simulate_pass(cfg, champ_model(), four) == once);

  auto other = cfg;
  other.seed = 124;
  CHECK(simulate_pass(other, champ_model()) != once);
}

TEST_CASE("every tag lies in an open gate on the TDC grid, time-sorted") {
  auto cfg = champ_sim(99, 3.0);
  cfg.tdc_resolution_s = 160e-12;
  const auto tags = simulate_pass(cfg, champ_model());
  REQUIRE(!tags.empty());

  std::uint64_t prev = 0;
  for (const auto& tag : tags) {
    CHECK(tag.timestamp_ps % 160 == 0);
    CHECK(tag.timestamp_ps >= prev);
    prev = tag.timestamp_ps;
    // Gate membership of the quantized time; quantization (160 ps) is
    // far below the gate width (1.65 ms), so edges are unambiguous.
    CHECK(chopper_open(cfg, static_cast<double>(tag.timestamp_ps) * 1e-12));
  }
}

TEST_CASE("per-pulse detection frequency converges to 1 - exp(-N)") {
  auto cfg = champ_sim(31, 0.2);  // 1.52e7 pulse slots
  cfg.chopper_open_s = cfg.chopper_period_s;  // every slot participates
  cfg.background_rate_cps = 0.0;
  cfg.jitter_fwhm_components_s.clear();

  const auto tags = simulate_pass(cfg, champ_model());
  const double slots = cfg.duration_s * cfg.channel.pulse_rate_hz;
  const double p = -std::expm1(-expected_detections_per_pulse(cfg.channel));
  const double se = std::sqrt(slots * p * (1.0 - p));
  CHECK(std::abs(static_cast<double>(tags.size()) - slots * p) < 4.0 * se);
}

TEST_CASE("background arrival phase is uniform across the gate") {
  auto cfg = champ_sim(61, 20.0);
  cfg.channel.pulse_energy_j = 1e-30;
  cfg.background_rate_cps = 2000.0;
  const auto tags = simulate_pass(cfg, champ_model());
  REQUIRE(tags.size() > 3000);

  constexpr int kBins = 16;
  double counts[kBins] = {};
  for (const auto& tag : tags) {
    const double t = static_cast<double>(tag.timestamp_ps) * 1e-12;
    const double phase = std::fmod(t, cfg.chopper_period_s);
    const int bin = std::min(
        kBins - 1, static_cast<int>(phase / cfg.chopper_open_s * kBins));
    counts[bin] += 1.0;
  }
  const double expected = static_cast<double>(tags.size()) / kBins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-square critical value, 15 dof at the 1% level
  CHECK(chi2 < 30.5779);
}

TEST_CASE("simulate_pass error paths") {
  const auto cfg = champ_sim();

  // Domain must cover the simulated span.
  const auto short_model = fit_range(synth_pass(330e3, 7700.0, 28.0, 5.0, 0.1), 4);
  CHECK_THROWS_AS(simulate_pass(cfg, short_model), DomainError);

  // Resource cap on the expected stream length.
  SimulateOptions tiny;
  tiny.max_tags = 100;
  CHECK_THROWS_AS(simulate_pass(cfg, champ_model(), tiny), ResourceError);
}

TEST_CASE("chunk seeds differ across chunks and seeds") {
  CHECK(derive_chunk_seed(42, 0) != derive_chunk_seed(42, 1));
  CHECK(derive_chunk_seed(42, 0) != derive_chunk_seed(43, 0));
  CHECK(derive_chunk_seed(42, 5) == derive_chunk_seed(42, 5));
}
