// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <span>
#include <vector>

#include "satlink/errors.hpp"

namespace satlink {

/// One laser-ranging record: emission epoch and measured round-trip light
/// time. Round trips must lie in (1e-4, 1e-1) s (30 km .. 15,000 km one way).
struct RangeSample {
  double emit_time_s = 0;   // [s] seconds since pass epoch
  double roundtrip_s = 0;   // [s] measured round-trip light time
};

/// Polynomial model of round-trip light time as a function of emission time
/// over one pass. Coefficients are in ascending powers of the normalized
/// variable u = 2 (t - t_mid) / (t_max - t_min), which keeps the normal
/// equations well conditioned for raw second-scale epochs.
///
/// Immutable after construction; evaluation outside [t_min, t_max] throws
/// rather than extrapolating.
class RangeModel {
 public:
  /// Validates domain ordering and the physical slope bound
  /// |d(roundtrip)/dt| < 1 over the domain.
  RangeModel(Eigen::VectorXd normalized_coefficients, double t_min_s,
             double t_max_s, double residual_rms_s);

  const Eigen::VectorXd& coefficients() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double t_min_s() const { return t_min_; }
  double t_max_s() const { return t_max_; }
  double residual_rms_s() const { return residual_rms_; }

  bool contains(double emit_time_s) const {
    return emit_time_s >= t_min_ && emit_time_s <= t_max_;
  }

  /// Map an epoch to the normalized fit variable.
  double normalize(double emit_time_s) const;

  /// Max |d(roundtrip)/dt| over the domain, sampled densely.
  double max_abs_slope() const;

 private:
  Eigen::VectorXd coeffs_;  // ascending powers of u
  double t_min_ = 0;        // [s]
  double t_max_ = 0;        // [s]
  double residual_rms_ = 0; // [s]
};

/// Least-squares polynomial fit of roundtrip_s against emit_time_s.
/// Throws InsufficientDataError for fewer than degree+1 samples or
/// duplicate epochs, ConditioningError when the design matrix is too
/// ill-conditioned (advice: lower the degree).
RangeModel fit_range(std::span<const RangeSample> samples, int degree);

/// Round-trip light time at an emission epoch inside the model domain.
double roundtrip_at(const RangeModel& model, double emit_time_s);

/// Solves the light-time equation t_exp + roundtrip(t_exp) = detect_time_s
/// by fixed-point iteration (contraction factor |roundtrip'| << 1).
/// Throws DomainError when the solution leaves the model domain and
/// NumericalError when 50 iterations do not converge.
double expected_emission_time(const RangeModel& model, double detect_time_s);

/// Deterministic flat-earth flyover: R(t) = sqrt(altitude^2 + (v (t - t_ca))^2),
/// roundtrip = 2 R / c, sampled on [0, duration] at the given interval.
/// Noise-free; intended as synthetic survey data for fit_range.
std::vector<RangeSample> synth_pass(double altitude_m, double ground_speed_mps,
                                    double closest_approach_s, double duration_s,
                                    double sample_interval_s);

/// Two-column CSV with mandatory header "emit_time_s,roundtrip_s".
std::vector<RangeSample> read_range_samples_csv(std::istream& in);
void write_range_samples_csv(std::ostream& out,
                             std::span<const RangeSample> samples);

}  // namespace satlink
