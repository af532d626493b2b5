// SPDX-License-Identifier: Apache-2.0

#include "satlink/linkbudget.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace satlink {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidParameterError(message);
}

void require_positive(double v, const char* field) {
  require(std::isfinite(v) && v > 0.0,
          std::string(field) + " must be strictly positive");
}

void require_fraction(double v, const char* field) {
  require(std::isfinite(v) && v > 0.0 && v <= 1.0,
          std::string(field) + " must be in (0, 1]");
}

}  // namespace

void validate_channel_params(const ChannelParams& p) {
  require_positive(p.pulse_rate_hz, "pulse_rate_hz");
  require_positive(p.pulse_energy_j, "pulse_energy_j");
  require_positive(p.photons_per_joule, "photons_per_joule");
  require_positive(p.wavelength_m, "wavelength_m");
  require_positive(p.range_m, "range_m");
  require_positive(p.retroreflector_area_m2, "retroreflector_area_m2");
  require_positive(p.receiver_area_m2, "receiver_area_m2");
  require_fraction(p.transmit_efficiency, "transmit_efficiency");
  require_fraction(p.receive_efficiency, "receive_efficiency");
  require_fraction(p.detector_efficiency, "detector_efficiency");
  require_fraction(p.atmospheric_transmission, "atmospheric_transmission");
  require_fraction(p.attenuation_factor, "attenuation_factor");
  require_positive(p.transmit_divergence_rad, "transmit_divergence_rad");
  require_positive(p.retro_divergence_rad, "retro_divergence_rad");

  const double from_wavelength = photons_per_joule(p.wavelength_m);
  const double rel = std::abs(p.photons_per_joule - from_wavelength) / from_wavelength;
  require(rel <= 0.01,
          "photons_per_joule disagrees with wavelength_m by " +
              std::to_string(rel * 100.0) + "% (limit 1%)");
}

double photons_per_joule(double wavelength_m) {
  if (!(std::isfinite(wavelength_m) && wavelength_m >= 100e-9 &&
        wavelength_m <= 10e-6)) {
    throw InvalidParameterError(
        "wavelength_m must lie in the optical band (100 nm .. 10 um)");
  }
  return wavelength_m / (constants::kPlanck * constants::kLightSpeed);
}

double attenuation_db_to_linear(double db) { return std::pow(10.0, -db / 10.0); }

double attenuation_linear_to_db(double linear) {
  if (!(linear > 0.0)) {
    throw InvalidParameterError("linear attenuation must be positive");
  }
  return -10.0 * std::log10(linear);
}

double uplink_attenuation(const ChannelParams& p) {
  const double geometry =
      4.0 * p.retroreflector_area_m2 /
      (std::numbers::pi * p.transmit_divergence_rad * p.transmit_divergence_rad *
       p.range_m * p.range_m);
  return geometry * p.transmit_efficiency * p.atmospheric_transmission *
         p.attenuation_factor;
}

double photons_at_satellite(const ChannelParams& p) {
  return p.pulse_energy_j * p.photons_per_joule * uplink_attenuation(p);
}

double downlink_attenuation(const ChannelParams& p) {
  const double geometry =
      4.0 * p.receiver_area_m2 /
      (std::numbers::pi * p.retro_divergence_rad * p.retro_divergence_rad *
       p.range_m * p.range_m);
  return geometry * p.receive_efficiency * p.atmospheric_transmission *
         p.detector_efficiency;
}

double expected_detections_per_pulse(const ChannelParams& p) {
  return photons_at_satellite(p) * downlink_attenuation(p);
}

LinkBudgetReport link_budget(const ChannelParams& p, double duty) {
  if (!(std::isfinite(duty) && duty > 0.0 && duty <= 1.0)) {
    throw InvalidParameterError("duty must be in (0, 1]");
  }
  LinkBudgetReport r;
  r.uplink_geometry =
      4.0 * p.retroreflector_area_m2 /
      (std::numbers::pi * p.transmit_divergence_rad * p.transmit_divergence_rad *
       p.range_m * p.range_m);
  r.uplink_attenuation = uplink_attenuation(p);
  r.photons_at_satellite = photons_at_satellite(p);
  r.downlink_geometry =
      4.0 * p.receiver_area_m2 /
      (std::numbers::pi * p.retro_divergence_rad * p.retro_divergence_rad *
       p.range_m * p.range_m);
  r.downlink_attenuation = downlink_attenuation(p);
  r.detections_per_pulse = expected_detections_per_pulse(p);
  r.predicted_rate_cps = r.detections_per_pulse * p.pulse_rate_hz * duty;
  return r;
}

}  // namespace satlink
