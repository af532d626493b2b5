// SPDX-License-Identifier: Apache-2.0

#include "satlink/orbit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <limits>
#include <sstream>
#include <string>

#include "satlink/linkbudget.hpp"  // constants::kLightSpeed

namespace satlink {

namespace {

constexpr double kMinRoundtripS = 1e-4;
constexpr double kMaxRoundtripS = 1e-1;
constexpr double kMaxConditionNumber = 1e12;
constexpr int kMaxLightTimeIterations = 50;

double evaluate_poly(const Eigen::VectorXd& coeffs, double u) {
  double acc = 0.0;
  for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i) {
    acc = acc * u + coeffs[i];
  }
  return acc;
}

double evaluate_poly_derivative(const Eigen::VectorXd& coeffs, double u) {
  double acc = 0.0;
  for (Eigen::Index i = coeffs.size() - 1; i >= 1; --i) {
    acc = acc * u + coeffs[i] * static_cast<double>(i);
  }
  return acc;
}

void validate_sample(const RangeSample& s) {
  if (!std::isfinite(s.emit_time_s)) {
    throw InvalidParameterError("range sample emit_time_s must be finite");
  }
  if (!(s.roundtrip_s > kMinRoundtripS && s.roundtrip_s < kMaxRoundtripS)) {
    throw InvalidParameterError(
        "range sample roundtrip_s out of physical band (1e-4, 1e-1) s: " +
        std::to_string(s.roundtrip_s));
  }
}

}  // namespace

RangeModel::RangeModel(Eigen::VectorXd normalized_coefficients, double t_min_s,
                       double t_max_s, double residual_rms_s)
    : coeffs_(std::move(normalized_coefficients)),
      t_min_(t_min_s),
      t_max_(t_max_s),
      residual_rms_(residual_rms_s) {
  if (coeffs_.size() == 0) {
    throw InvalidParameterError("range model needs at least one coefficient");
  }
  if (!(std::isfinite(t_min_) && std::isfinite(t_max_) && t_min_ <= t_max_)) {
    throw InvalidParameterError("range model domain must be finite and ordered");
  }
  if (!(std::isfinite(residual_rms_) && residual_rms_ >= 0.0)) {
    throw InvalidParameterError("range model residual RMS must be >= 0");
  }
  const double slope = max_abs_slope();
  if (!(slope < 1.0)) {
    throw InvalidParameterError(
        "range model slope |d(roundtrip)/dt| reaches " + std::to_string(slope) +
        "; range rate would exceed the speed of light");
  }
}

double RangeModel::normalize(double emit_time_s) const {
  const double span = t_max_ - t_min_;
  if (span <= 0.0) return 0.0;
  return 2.0 * (emit_time_s - 0.5 * (t_min_ + t_max_)) / span;
}

double RangeModel::max_abs_slope() const {
  const double span = t_max_ - t_min_;
  if (span <= 0.0 || coeffs_.size() < 2) return 0.0;
  const double du_dt = 2.0 / span;
  double worst = 0.0;
  constexpr int kProbes = 512;
  for (int i = 0; i <= kProbes; ++i) {
    const double u = -1.0 + 2.0 * static_cast<double>(i) / kProbes;
    worst = std::max(worst, std::abs(evaluate_poly_derivative(coeffs_, u)) * du_dt);
  }
  return worst;
}

RangeModel fit_range(std::span<const RangeSample> samples, int degree) {
  if (degree < 0) {
    throw InvalidParameterError("fit degree must be >= 0");
  }
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index n_coeffs = degree + 1;
  if (n < n_coeffs) {
    throw InsufficientDataError(
        "fit of degree " + std::to_string(degree) + " needs at least " +
        std::to_string(degree + 1) + " samples, got " + std::to_string(n));
  }

  for (const auto& s : samples) validate_sample(s);

  std::vector<double> times(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) times[i] = samples[i].emit_time_s;
  std::sort(times.begin(), times.end());
  if (std::adjacent_find(times.begin(), times.end()) != times.end()) {
    throw InvalidParameterError("range sample emit times must be distinct");
  }
  const double t_min = times.front();
  const double t_max = times.back();
  if (t_max <= t_min && degree > 0) {
    throw InsufficientDataError("degenerate time span for polynomial fit");
  }

  const double mid = 0.5 * (t_min + t_max);
  const double half_span = t_max > t_min ? 0.5 * (t_max - t_min) : 1.0;

  Eigen::MatrixXd design(n, n_coeffs);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (samples[i].emit_time_s - mid) / half_span;
    double power = 1.0;
    for (Eigen::Index j = 0; j < n_coeffs; ++j) {
      design(i, j) = power;
      power *= u;
    }
    rhs[i] = samples[i].roundtrip_s;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  if (!(smallest > 0.0) || sv[0] / smallest > kMaxConditionNumber) {
    throw ConditioningError(
        "normal equations are ill-conditioned (condition estimate above 1e12); "
        "try a lower polynomial degree");
  }
  const Eigen::VectorXd coeffs = svd.solve(rhs);
  const double residual_rms =
      std::sqrt((design * coeffs - rhs).squaredNorm() / static_cast<double>(n));

  return RangeModel(coeffs, t_min, t_max, residual_rms);
}

double roundtrip_at(const RangeModel& model, double emit_time_s) {
  if (!model.contains(emit_time_s)) {
    throw DomainError("emission time " + std::to_string(emit_time_s) +
                      " s outside model domain [" +
                      std::to_string(model.t_min_s()) + ", " +
                      std::to_string(model.t_max_s()) + "] s");
  }
  return evaluate_poly(model.coefficients(), model.normalize(emit_time_s));
}

double expected_emission_time(const RangeModel& model, double detect_time_s) {
  const auto clamped_roundtrip = [&](double t) {
    const double tc = std::clamp(t, model.t_min_s(), model.t_max_s());
    return evaluate_poly(model.coefficients(), model.normalize(tc));
  };

  // Convergence floor: the nominal 1e-13 s tolerance, widened only by
  // floating-point granularity at large epochs.
  const double tol =
      1e-13 + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(detect_time_s);

  double t = detect_time_s - clamped_roundtrip(detect_time_s);
  bool converged = false;
  for (int iter = 0; iter < kMaxLightTimeIterations; ++iter) {
    const double next = detect_time_s - clamped_roundtrip(t);
    const double step = std::abs(next - t);
    t = next;
    if (step < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("light-time inversion did not converge within " +
                         std::to_string(kMaxLightTimeIterations) + " iterations");
  }
  if (!model.contains(t)) {
    throw DomainError("light-time solution " + std::to_string(t) +
                      " s outside model domain");
  }
  return t;
}

std::vector<RangeSample> synth_pass(double altitude_m, double ground_speed_mps,
                                    double closest_approach_s, double duration_s,
                                    double sample_interval_s) {
  if (!(std::isfinite(altitude_m) && altitude_m > 100e3)) {
    throw InvalidParameterError("altitude_m must exceed 100 km");
  }
  if (!(std::isfinite(ground_speed_mps) && ground_speed_mps >= 0.0)) {
    throw InvalidParameterError("ground_speed_mps must be >= 0");
  }
  if (!(duration_s > 0.0) || !(sample_interval_s > 0.0)) {
    throw InvalidParameterError("duration_s and sample_interval_s must be positive");
  }

  const auto count =
      static_cast<size_t>(std::floor(duration_s / sample_interval_s)) + 1;
  std::vector<RangeSample> samples;
  samples.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) * sample_interval_s;
    const double cross_track = ground_speed_mps * (t - closest_approach_s);
    const double range = std::hypot(altitude_m, cross_track);
    samples.push_back({t, 2.0 * range / constants::kLightSpeed});
  }
  return samples;
}

std::vector<RangeSample> read_range_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("range CSV is empty; expected header emit_time_s,roundtrip_s");
  }
  // Tolerate a UTF-8 BOM and surrounding whitespace in the header.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::string header = line;
  std::erase_if(header, [](char c) { return c == ' ' || c == '\r' || c == '\t'; });
  if (header != "emit_time_s,roundtrip_s") {
    throw FormatError("range CSV header must be 'emit_time_s,roundtrip_s', got '" +
                      line + "'");
  }

  std::vector<RangeSample> samples;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    RangeSample s;
    char comma = 0;
    if (!(row >> s.emit_time_s >> comma >> s.roundtrip_s) || comma != ',') {
      throw FormatError("range CSV line " + std::to_string(line_no) +
                        " is not 'emit_time_s,roundtrip_s'");
    }
    validate_sample(s);
    samples.push_back(s);
  }
  return samples;
}

void write_range_samples_csv(std::ostream& out,
                             std::span<const RangeSample> samples) {
  out << "emit_time_s,roundtrip_s\n";
  out.precision(17);
  for (const auto& s : samples) {
    out << s.emit_time_s << ',' << s.roundtrip_s << '\n';
  }
}

}  // namespace satlink
