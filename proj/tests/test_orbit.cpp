// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "satlink/linkbudget.hpp"  // constants
#include "satlink/orbit.hpp"

using namespace satlink;

namespace {

// Brute-force power-sum evaluation, the independent oracle for Horner.
double power_sum_eval(const Eigen::VectorXd& coeffs, double u) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
    acc += coeffs[j] * std::pow(u, static_cast<double>(j));
  }
  return acc;
}

std::vector<RangeSample> cubic_samples() {
  // Exact cubic in physical time, values around 2.5 ms.
  const auto poly = [](double t) {
    return 2.5e-3 - 2.0e-5 * t + 3.0e-7 * t * t - 4.0e-9 * t * t * t;
  };
  std::vector<RangeSample> samples;
  for (int i = 0; i <= 12; ++i) {
    const double t = 1.25 * i;
    samples.push_back({t, poly(t)});
  }
  return samples;
}

RangeModel random_model(std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double t_min = 100.0 * u01(eng);
  const double span = 5.0 + 45.0 * u01(eng);
  const int degree = 1 + static_cast<int>(u01(eng) * 4.0);
  Eigen::VectorXd coeffs(degree + 1);
  coeffs[0] = 1e-3 + 8e-3 * u01(eng);
  // Keep |d(roundtrip)/dt| well below the 1e-3 premise of the inversion
  // property: |p'(u)| <= sum j |c_j| and du/dt = 2/span.
  const double slope_budget = 1e-4 * span / 2.0;
  for (int j = 1; j <= degree; ++j) {
    coeffs[j] = slope_budget / (degree * j) * (2.0 * u01(eng) - 1.0);
  }
  return RangeModel(coeffs, t_min, t_min + span, 0.0);
}

}  // namespace

TEST_CASE("exact cubic data fits with machine-level residual") {
  const auto samples = cubic_samples();
  const auto model = fit_range(samples, 3);
  CHECK(model.residual_rms_s() < 1e-15 * 2.5e-3);
  for (const auto& s : samples) {
    CHECK(roundtrip_at(model, s.emit_time_s) ==
          doctest::Approx(s.roundtrip_s).epsilon(1e-12));
  }
}

TEST_CASE("synthetic pass fit reproduces the endpoint round trips") {
  const auto samples = synth_pass(330e3, 7700.0, 28.0, 15.0, 0.5);
  REQUIRE(samples.size() == 31);
  CHECK(samples.front().roundtrip_s == doctest::Approx(2.63e-3).epsilon(5e-3));
  CHECK(samples.back().roundtrip_s == doctest::Approx(2.30e-3).epsilon(5e-3));

  const auto model = fit_range(samples, 4);
  const double slack = std::max(model.residual_rms_s() * 3.0, 1e-9);
  CHECK(std::abs(roundtrip_at(model, 0.0) - samples.front().roundtrip_s) < slack);
  CHECK(std::abs(roundtrip_at(model, 15.0) - samples.back().roundtrip_s) < slack);
}

TEST_CASE("fit residual floor equals the injected noise") {
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    auto samples = synth_pass(330e3, 7700.0, 28.0, 15.0, 0.1);
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> noise(0.0, 1e-9);
    for (auto& s : samples) s.roundtrip_s += noise(eng);
    const auto model = fit_range(samples, 4);
    CHECK(model.residual_rms_s() > 0.5e-9);
    CHECK(model.residual_rms_s() < 1.5e-9);
  }
}

TEST_CASE("fit error paths") {
  const auto samples = cubic_samples();
  std::vector<RangeSample> three(samples.begin(), samples.begin() + 3);
  CHECK_THROWS_AS(fit_range(three, 4), InsufficientDataError);

  auto dup = samples;
  dup[3].emit_time_s = dup[2].emit_time_s;
  CHECK_THROWS_WITH_AS(fit_range(dup, 3), doctest::Contains("distinct"),
                       InvalidParameterError);

  auto bad = samples;
  bad[0].roundtrip_s = 0.5;  // 75,000 km one way
  CHECK_THROWS_AS(fit_range(bad, 3), InvalidParameterError);
}

TEST_CASE("roundtrip_at refuses extrapolation") {
  const auto model = fit_range(cubic_samples(), 3);
  CHECK_THROWS_AS(roundtrip_at(model, model.t_min_s() - 0.1), DomainError);
  CHECK_THROWS_AS(roundtrip_at(model, model.t_max_s() + 0.1), DomainError);
  CHECK_NOTHROW(roundtrip_at(model, model.t_min_s()));
  CHECK_NOTHROW(roundtrip_at(model, model.t_max_s()));
}

TEST_CASE("constant model evaluates to its coefficient") {
  Eigen::VectorXd coeffs(1);
  coeffs[0] = 2.5e-3;
  const RangeModel model(coeffs, 0.0, 20.0, 0.0);
  CHECK(roundtrip_at(model, 0.0) == 2.5e-3);
  CHECK(roundtrip_at(model, 13.7) == 2.5e-3);
}

TEST_CASE("Horner agrees with brute-force power sums") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto model = random_model(eng);
  for (int i = 0; i < 20; ++i) {
    const double t =
        model.t_min_s() + (model.t_max_s() - model.t_min_s()) * u01(eng);
    const double direct = power_sum_eval(model.coefficients(), model.normalize(t));
    CHECK(roundtrip_at(model, t) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("light-time inversion: constant range") {
  Eigen::VectorXd coeffs(1);
  coeffs[0] = 2.5e-3;
  const RangeModel model(coeffs, 0.0, 20.0, 0.0);
  CHECK(expected_emission_time(model, 1.0025) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("light-time inversion: linear drift closed form") {
  // roundtrip(t) = c0 + slope * t with the pass-scale drift of 0.33 ms / 15 s;
  // the solution is t_exp = (t - c0) / (1 + slope).
  const double slope = 2.2e-5;
  const double c0 = 2.63e-3;
  const double t_min = 0.0, t_max = 15.0;
  // In normalized u = (2 t - (t_min + t_max)) / span:
  const double half_span = 0.5 * (t_max - t_min);
  Eigen::VectorXd coeffs(2);
  coeffs[1] = slope * half_span;
  coeffs[0] = c0 + slope * 0.5 * (t_min + t_max);
  const RangeModel model(coeffs, t_min, t_max, 0.0);
  for (double t : {0.01, 1.0, 7.5, 14.9}) {
    const double expected = (t - c0) / (1.0 + slope);
    CHECK(std::abs(expected_emission_time(model, t) - expected) < 1e-12);
  }
}

TEST_CASE("light-time inversion is the inverse of forward propagation") {
  std::mt19937_64 eng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto model = random_model(eng);
    REQUIRE(model.max_abs_slope() < 1e-3);
    for (int i = 0; i < 10; ++i) {
      const double t0 =
          model.t_min_s() + (model.t_max_s() - model.t_min_s()) * u01(eng);
      const double detect = t0 + roundtrip_at(model, t0);
      CHECK(std::abs(expected_emission_time(model, detect) - t0) < 1e-12);
    }
  }
}

TEST_CASE("light-time inversion rejects out-of-domain solutions") {
  Eigen::VectorXd coeffs(1);
  coeffs[0] = 2.5e-3;
  const RangeModel model(coeffs, 1.0, 2.0, 0.0);
  CHECK_THROWS_AS(expected_emission_time(model, 0.5), DomainError);
  CHECK_THROWS_AS(expected_emission_time(model, 3.0), DomainError);
}

TEST_CASE("fitting is invariant under a time-origin shift") {
  const auto samples = synth_pass(330e3, 7700.0, 28.0, 15.0, 0.5);
  const double shift = 123.456;
  auto shifted = samples;
  for (auto& s : shifted) s.emit_time_s += shift;

  const auto base = fit_range(samples, 4);
  const auto moved = fit_range(shifted, 4);
  for (const auto& s : samples) {
    const double a = roundtrip_at(base, s.emit_time_s);
    const double b = roundtrip_at(moved, s.emit_time_s + shift);
    CHECK(b == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("synth_pass geometry") {
  const double altitude = 330e3;
  const auto samples = synth_pass(altitude, 7700.0, 5.0, 10.0, 0.5);
  const double at_ca = samples[10].roundtrip_s;  // t = 5.0
  CHECK(at_ca == doctest::Approx(2.0 * altitude / constants::kLightSpeed)
                     .epsilon(1e-15));
  // Even in time about closest approach.
  CHECK(samples[6].roundtrip_s == samples[14].roundtrip_s);  // t = 3, 7

  // Offset where the slant range is ~394 km gives the 2.63 ms round trip.
  const double x = std::sqrt(394227.0 * 394227.0 - altitude * altitude);
  const auto one = synth_pass(altitude, 7700.0, x / 7700.0, 1.0, 1.0);
  CHECK(one.front().roundtrip_s == doctest::Approx(2.63e-3).epsilon(1e-3));

  CHECK_THROWS_AS(synth_pass(50e3, 7700.0, 0.0, 1.0, 0.1),
                  InvalidParameterError);
  CHECK_THROWS_AS(synth_pass(330e3, 7700.0, 0.0, -1.0, 0.1),
                  InvalidParameterError);
}

TEST_CASE("model constructor enforces the physical slope bound") {
  Eigen::VectorXd coeffs(2);
  coeffs[0] = 2.5e-3;
  coeffs[1] = 2.0;  // slope 2/half_span = 0.4 per second over a 10 s domain
  CHECK_NOTHROW(RangeModel(coeffs, 0.0, 10.0, 0.0));
  coeffs[1] = 10.0;  // slope 2 > 1
  CHECK_THROWS_AS(RangeModel(coeffs, 0.0, 10.0, 0.0), InvalidParameterError);
}

TEST_CASE("range sample CSV round trip and header enforcement") {
  const auto samples = synth_pass(330e3, 7700.0, 28.0, 15.0, 1.0);
  std::stringstream buffer;
  write_range_samples_csv(buffer, samples);
  const auto back = read_range_samples_csv(buffer);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].emit_time_s == samples[i].emit_time_s);
    CHECK(back[i].roundtrip_s == samples[i].roundtrip_s);
  }

  std::stringstream headerless("0.0,2.5e-3\n1.0,2.4e-3\n");
  CHECK_THROWS_AS(read_range_samples_csv(headerless), FormatError);

  std::stringstream garbage("emit_time_s,roundtrip_s\n1.0;2.5e-3\n");
  CHECK_THROWS_AS(read_range_samples_csv(garbage), FormatError);
}
