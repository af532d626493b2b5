// SPDX-License-Identifier: Apache-2.0

#include "satlink/syncanalysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace satlink {

namespace {

double fold_half_period(double x, double period) {
  double y = std::fmod(x + 0.5 * period, period);
  if (y < 0.0) y += period;
  return y - 0.5 * period;
}

}  // namespace

OffsetResult compute_offsets(std::span<const TimeTag> tags,
                             const RangeModel& model, double pulse_rate_hz,
                             double pulse_phase_s) {
  if (!(std::isfinite(pulse_rate_hz) && pulse_rate_hz > 0.0)) {
    throw InvalidParameterError("pulse_rate_hz must be strictly positive");
  }
  const double period = 1.0 / pulse_rate_hz;

  OffsetResult result;
  result.offsets.reserve(tags.size());
  for (const auto& tag : tags) {
    const double t = static_cast<double>(tag.timestamp_ps) * 1e-12;
    double t_exp = 0.0;
    try {
      t_exp = expected_emission_time(model, t);
    } catch (const DomainError&) {
      ++result.skipped_out_of_domain;
      continue;
    }
    const auto k = static_cast<std::int64_t>(
        std::llround((t_exp - pulse_phase_s) * pulse_rate_hz));
    const double t0 = pulse_phase_s + static_cast<double>(k) / pulse_rate_hz;
    double d = t0 - t_exp;
    if (d < -0.5 * period) d += period;
    if (d >= 0.5 * period) d -= period;
    result.offsets.push_back({t, t_exp, k, d});
  }
  return result;
}

std::uint64_t OffsetHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

OffsetHistogram build_histogram(std::span<const OffsetRecord> offsets,
                                double bin_width_s, double half_range_s) {
  if (!(std::isfinite(bin_width_s) && bin_width_s > 0.0)) {
    throw InvalidParameterError("bin_width_s must be strictly positive");
  }
  if (!(std::isfinite(half_range_s) && half_range_s >= 0.0)) {
    throw InvalidParameterError("half_range_s must be >= 0");
  }

  OffsetHistogram hist;
  hist.bin_width_s = bin_width_s;

  if (half_range_s > 0.0) {
    hist.origin_s = -half_range_s;
    const auto n_bins = static_cast<std::size_t>(
        std::ceil(2.0 * half_range_s / bin_width_s - 1e-9));
    hist.counts.assign(std::max<std::size_t>(n_bins, 1), 0);
  } else {
    if (offsets.empty()) {
      hist.origin_s = 0.0;
      return hist;
    }
    double lo = offsets[0].d_s, hi = offsets[0].d_s;
    for (const auto& o : offsets) {
      lo = std::min(lo, o.d_s);
      hi = std::max(hi, o.d_s);
    }
    hist.origin_s = std::floor(lo / bin_width_s) * bin_width_s;
    const auto n_bins =
        static_cast<std::size_t>(std::floor((hi - hist.origin_s) / bin_width_s)) + 1;
    hist.counts.assign(n_bins, 0);
  }

  for (const auto& o : offsets) {
    const double idx = std::floor((o.d_s - hist.origin_s) / bin_width_s);
    if (idx < 0.0 || idx >= static_cast<double>(hist.counts.size())) continue;
    ++hist.counts[static_cast<std::size_t>(idx)];
  }
  return hist;
}

namespace {

struct ScaledFitData {
  Eigen::VectorXd x;  // bin centers in units of the bin width
  Eigen::VectorXd y;  // counts
  Eigen::VectorXd w;  // Poisson weights 1 / max(count, 1)
};

double chi_square(const ScaledFitData& d, const Eigen::Vector4d& theta) {
  const double a = theta[0], mu = theta[1], sigma = theta[2], b = theta[3];
  double chi2 = 0.0;
  for (Eigen::Index i = 0; i < d.x.size(); ++i) {
    const double z = (d.x[i] - mu) / sigma;
    const double r = d.y[i] - (a * std::exp(-0.5 * z * z) + b);
    chi2 += d.w[i] * r * r;
  }
  return chi2;
}

void build_system(const ScaledFitData& d, const Eigen::Vector4d& theta,
                  Eigen::Matrix4d& hessian, Eigen::Vector4d& gradient) {
  const double a = theta[0], mu = theta[1], sigma = theta[2], b = theta[3];
  hessian.setZero();
  gradient.setZero();
  for (Eigen::Index i = 0; i < d.x.size(); ++i) {
    const double z = (d.x[i] - mu) / sigma;
    const double e = std::exp(-0.5 * z * z);
    const double r = d.y[i] - (a * e + b);
    Eigen::Vector4d jac;
    jac[0] = e;
    jac[1] = a * e * z / sigma;
    jac[2] = a * e * z * z / sigma;
    jac[3] = 1.0;
    hessian.noalias() += d.w[i] * jac * jac.transpose();
    gradient.noalias() += d.w[i] * r * jac;
  }
}

GaussianFitResult spike_result(const OffsetHistogram& hist, std::size_t peak_bin,
                               double peak_count) {
  GaussianFitResult fit;
  fit.amplitude = peak_count;
  fit.mean_s = hist.bin_center(peak_bin);
  fit.sigma_s = hist.bin_width_s / kFwhmPerSigma;  // FWHM of one bin width
  fit.baseline = 0.0;
  fit.fwhm_s = kFwhmPerSigma * fit.sigma_s;
  fit.converged = true;
  fit.degenerate = true;
  return fit;
}

}  // namespace

GaussianFitResult fit_gaussian(const OffsetHistogram& hist) {
  const std::size_t n = hist.counts.size();
  std::size_t non_empty = 0, peak_bin = 0;
  std::uint64_t peak = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (hist.counts[i] > 0) ++non_empty;
    if (hist.counts[i] > peak) {
      peak = hist.counts[i];
      peak_bin = i;
    }
  }
  if (n == 0 || peak == 0) {
    throw InsufficientDataError("histogram has no counts to fit");
  }

  bool spike = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (hist.counts[i] > 0 &&
        (i + 1 < peak_bin || i > peak_bin + 1)) {
      spike = false;
      break;
    }
  }
  if (spike) return spike_result(hist, peak_bin, static_cast<double>(peak));
  if (non_empty < 5) {
    throw InsufficientDataError("Gaussian fit needs >= 5 non-empty bins, got " +
                                std::to_string(non_empty));
  }

  // Work in bin-width units so the normal equations stay well conditioned
  // for picosecond-scale abscissae.
  ScaledFitData data;
  data.x.resize(static_cast<Eigen::Index>(n));
  data.y.resize(static_cast<Eigen::Index>(n));
  data.w.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    data.x[idx] = static_cast<double>(i) + 0.5;
    data.y[idx] = static_cast<double>(hist.counts[i]);
    data.w[idx] = 1.0 / std::max(data.y[idx], 1.0);
  }

  // Moment-based start: baseline from the median bin, mean from the top
  // decile, width from the baseline-subtracted second moment.
  std::vector<double> sorted(data.y.data(), data.y.data() + data.y.size());
  std::sort(sorted.begin(), sorted.end());
  const double b0 = sorted[n / 2];
  const double decile = sorted[(9 * n) / 10];
  double top_sum = 0.0, top_weight = 0.0;
  for (Eigen::Index i = 0; i < data.x.size(); ++i) {
    if (data.y[i] >= decile && data.y[i] > 0.0) {
      top_sum += data.y[i] * data.x[i];
      top_weight += data.y[i];
    }
  }
  const double mu0 =
      top_weight > 0.0 ? top_sum / top_weight : data.x[static_cast<Eigen::Index>(peak_bin)];
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (Eigen::Index i = 0; i < data.x.size(); ++i) {
    const double excess = std::max(data.y[i] - b0, 0.0);
    m0 += excess;
    m1 += excess * data.x[i];
    m2 += excess * data.x[i] * data.x[i];
  }
  double sigma0 = 1.0;
  if (m0 > 0.0) {
    const double mean = m1 / m0;
    const double var = m2 / m0 - mean * mean;
    if (var > 0.0) sigma0 = std::sqrt(var);
  }
  const double a0 = std::max(static_cast<double>(peak) - b0, 1.0);

  Eigen::Vector4d theta(a0, mu0, sigma0, b0);
  double chi2 = chi_square(data, theta);
  double lambda = 1e-3;
  bool converged = false;
  int iterations = 0;

  Eigen::Matrix4d hessian;
  Eigen::Vector4d gradient;
  for (int iter = 0; iter < 200 && !converged; ++iter) {
    iterations = iter + 1;
    build_system(data, theta, hessian, gradient);

    bool accepted = false;
    for (int attempt = 0; attempt < 24 && !accepted; ++attempt) {
      Eigen::Matrix4d damped = hessian;
      for (int j = 0; j < 4; ++j) {
        damped(j, j) += lambda * std::max(hessian(j, j), 1e-12);
      }
      const Eigen::Vector4d step = damped.ldlt().solve(gradient);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Eigen::Vector4d trial = theta + step;
      trial[2] = std::abs(trial[2]);
      if (trial[2] < 1e-6) trial[2] = 1e-6;
      const double trial_chi2 = chi_square(data, trial);
      if (trial_chi2 <= chi2) {
        const Eigen::Vector4d scale(std::max(std::abs(theta[0]), 1.0),
                                    std::max(std::abs(theta[1]), 1.0),
                                    std::max(std::abs(theta[2]), 1.0),
                                    std::max(std::abs(theta[3]), 1.0));
        const double rel_step = (step.cwiseQuotient(scale)).cwiseAbs().maxCoeff();
        theta = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel_step < 1e-8) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;  // damping exhausted; keep the best iterate
  }

  GaussianFitResult fit;
  const double w = hist.bin_width_s;
  fit.amplitude = theta[0];
  fit.mean_s = hist.origin_s + theta[1] * w;
  fit.sigma_s = theta[2] * w;
  fit.baseline = theta[3];
  fit.fwhm_s = kFwhmPerSigma * fit.sigma_s;
  fit.converged = converged;
  fit.iterations = iterations;

  build_system(data, theta, hessian, gradient);
  const Eigen::Matrix4d covariance =
      hessian.fullPivLu().isInvertible() ? hessian.inverse()
                                         : Eigen::Matrix4d::Zero();
  const double var_sigma = covariance(2, 2);
  fit.sigma_stderr_s = var_sigma > 0.0 ? std::sqrt(var_sigma) * w : 0.0;
  fit.fwhm_stderr_s = kFwhmPerSigma * fit.sigma_stderr_s;

  // A peak narrower than one bin or buried in the baseline fluctuation is
  // not a usable timing measurement.
  fit.degenerate = fit.sigma_s * kFwhmPerSigma < w ||
                   fit.amplitude < 3.0 * std::sqrt(std::max(fit.baseline, 1.0));
  return fit;
}

RateReport rate_report(std::uint64_t total_tags, double duration_s, double duty,
                       double pulse_rate_hz, double background_rate_cps) {
  if (!(std::isfinite(duration_s) && duration_s > 0.0)) {
    throw InvalidParameterError("duration_s must be strictly positive");
  }
  if (!(std::isfinite(duty) && duty > 0.0 && duty <= 1.0)) {
    throw InvalidParameterError("duty must be in (0, 1]");
  }
  if (!(std::isfinite(pulse_rate_hz) && pulse_rate_hz > 0.0)) {
    throw InvalidParameterError("pulse_rate_hz must be strictly positive");
  }
  if (!(std::isfinite(background_rate_cps) && background_rate_cps >= 0.0)) {
    throw InvalidParameterError("background_rate_cps must be >= 0");
  }
  RateReport report;
  report.mean_rate_cps =
      (static_cast<double>(total_tags) / duration_s) / duty;
  report.background_rate_cps = background_rate_cps;
  report.photons_per_pulse =
      (report.mean_rate_cps - background_rate_cps) / pulse_rate_hz;
  return report;
}

double snr_value(double signal_counts, double background_counts) {
  if (background_counts <= 0.0) {
    return signal_counts > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return (signal_counts - background_counts) / background_counts;
}

SnrReport snr(std::span<const OffsetRecord> offsets,
              const GaussianFitResult& fit, double signal_bin_width_s,
              double pulse_rate_hz, const RateReport& rates) {
  if (!(std::isfinite(pulse_rate_hz) && pulse_rate_hz > 0.0)) {
    throw InvalidParameterError("pulse_rate_hz must be strictly positive");
  }
  const double period = 1.0 / pulse_rate_hz;
  if (!(std::isfinite(signal_bin_width_s) && signal_bin_width_s > 0.0 &&
        signal_bin_width_s < period)) {
    throw InvalidParameterError(
        "signal_bin_width_s must lie in (0, pulse period)");
  }

  const double exclusion = 3.0 * fit.fwhm_s;
  const double outside_width = period - std::min(2.0 * exclusion, period);

  std::uint64_t inside = 0, outside = 0;
  for (const auto& o : offsets) {
    const double dd = fold_half_period(o.d_s - fit.mean_s, period);
    if (dd >= -0.5 * signal_bin_width_s && dd < 0.5 * signal_bin_width_s) {
      ++inside;
    }
    if (std::abs(dd) > exclusion) ++outside;
  }

  SnrReport report;
  report.signal_bin_width_s = signal_bin_width_s;
  report.signal_counts = static_cast<double>(inside);
  report.background_counts =
      outside_width > 0.0
          ? static_cast<double>(outside) * signal_bin_width_s / outside_width
          : 0.0;
  report.snr = snr_value(report.signal_counts, report.background_counts);
  report.snr_infinite = report.background_counts <= 0.0 && inside > 0;
  report.mean_rate_cps = rates.mean_rate_cps;
  report.background_rate_cps = rates.background_rate_cps;
  report.photons_per_pulse = rates.photons_per_pulse;
  return report;
}

double signal_fraction(double bin_width_s, double fwhm_s) {
  if (!(bin_width_s > 0.0) || !(std::isfinite(fwhm_s) && fwhm_s > 0.0)) {
    throw InvalidParameterError(
        "signal_fraction needs positive bin width and FWHM");
  }
  const double sigma = fwhm_s / kFwhmPerSigma;
  return std::erf(bin_width_s / (2.0 * sigma * std::sqrt(2.0)));
}

}  // namespace satlink
