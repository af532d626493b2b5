// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satlink/orbit.hpp"
#include "satlink/photonsim.hpp"

namespace satlink {

/// 2 sqrt(2 ln 2): FWHM of a Gaussian per unit sigma.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

/// One detection matched to its nominal pulse slot. d_s is the offset of
/// the slot epoch from the reconstructed emission time, folded into
/// [-T_p/2, T_p/2) with T_p the pulse period, since pulse identity is only
/// defined modulo the period.
struct OffsetRecord {
  double detect_time_s = 0;   // [s]
  double t_exp_s = 0;         // [s] reconstructed emission time
  std::int64_t pulse_index = 0;
  double d_s = 0;             // [s] folded t0 - t_exp
};

struct OffsetResult {
  std::vector<OffsetRecord> offsets;
  std::size_t skipped_out_of_domain = 0;
};

/// Inverts the light-time equation for every tag and assigns the nearest
/// pulse slot of the train t0 = pulse_phase_s + k / pulse_rate_hz.
/// Tags whose solution leaves the model domain are counted and skipped.
OffsetResult compute_offsets(std::span<const TimeTag> tags,
                             const RangeModel& model, double pulse_rate_hz,
                             double pulse_phase_s = 0.0);

/// Binned offset distribution with left-closed bins.
struct OffsetHistogram {
  double bin_width_s = 0;
  double origin_s = 0;  // left edge of bin 0
  std::vector<std::uint64_t> counts;

  double bin_center(std::size_t i) const {
    return origin_s + (static_cast<double>(i) + 0.5) * bin_width_s;
  }
  std::uint64_t total() const;
};

/// half_range_s > 0 pins the histogram to [-half_range, half_range);
/// 0 sizes it from the data. Every offset lands in exactly one bin.
OffsetHistogram build_histogram(std::span<const OffsetRecord> offsets,
                                double bin_width_s, double half_range_s = 0.0);

struct GaussianFitResult {
  double amplitude = 0;      // [counts] peak height above baseline
  double mean_s = 0;         // [s]
  double sigma_s = 0;        // [s]
  double baseline = 0;       // [counts]
  double fwhm_s = 0;         // kFwhmPerSigma * sigma_s, always
  double sigma_stderr_s = 0; // [s] from the fit covariance
  double fwhm_stderr_s = 0;  // [s]
  bool converged = false;
  bool degenerate = false;   // spike-like or insignificant peak
  int iterations = 0;
};

/// Weighted (Poisson, 1/max(count,1)) Levenberg-Marquardt fit of
/// A exp(-(x-mu)^2 / 2 sigma^2) + b to bin centers, initialized from the
/// histogram moments. Needs >= 5 non-empty bins unless the data is a
/// single spike, which is reported as degenerate with sigma at most one
/// bin width.
GaussianFitResult fit_gaussian(const OffsetHistogram& hist);

/// Duty-corrected count rates and the per-pulse photon-number estimate.
struct RateReport {
  double mean_rate_cps = 0;        // [1/s] full-rate equivalent
  double background_rate_cps = 0;  // [1/s] full-rate equivalent
  double photons_per_pulse = 0;    // [-] raw (mean - background) / rate
};

RateReport rate_report(std::uint64_t total_tags, double duration_s, double duty,
                       double pulse_rate_hz, double background_rate_cps);

struct SnrReport {
  double signal_bin_width_s = 0;
  double signal_counts = 0;        // N' inside [mu - w/2, mu + w/2)
  double background_counts = 0;    // N'_b expected in the same window
  double snr = 0;                  // (N' - N'_b) / N'_b
  bool snr_infinite = false;       // no off-peak counts to estimate N'_b
  double mean_rate_cps = 0;
  double background_rate_cps = 0;
  double photons_per_pulse = 0;
};

/// (N' - N'_b) / N'_b; never divides by zero.
double snr_value(double signal_counts, double background_counts);

/// Counts offsets inside the signal window centered on the fitted mean and
/// estimates the window background from the region farther than 3 FWHM
/// from the peak (distances taken on the folded period circle).
SnrReport snr(std::span<const OffsetRecord> offsets,
              const GaussianFitResult& fit, double signal_bin_width_s,
              double pulse_rate_hz, const RateReport& rates = {});

/// Fraction of a centered Gaussian of the given FWHM falling inside a
/// centered bin: erf(bin / (2 sigma sqrt(2))).
double signal_fraction(double bin_width_s, double fwhm_s);

}  // namespace satlink
