// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "satlink/errors.hpp"

namespace satlink {

/// Physical constants (CODATA 2018, exact by SI definition).
namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;      // [J s]
inline constexpr double kLightSpeed = 299792458.0;     // [m/s]
}  // namespace constants

/// Optical link parameters for one satellite pass. All fields SI.
///
/// Values are plain doubles; call validate_channel_params() once after
/// construction (config loading does this for you). The link-budget
/// functions assume a validated instance.
struct ChannelParams {
  double pulse_rate_hz = 0;             // [Hz]  laser repetition rate
  double pulse_energy_j = 0;            // [J]   single-pulse energy
  double photons_per_joule = 0;         // [1/J] photon number per joule
  double wavelength_m = 0;              // [m]   used to cross-check photons_per_joule
  double range_m = 0;                   // [m]   satellite distance
  double retroreflector_area_m2 = 0;    // [m^2] effective corner-cube area
  double receiver_area_m2 = 0;          // [m^2] effective receiving-telescope area
  double transmit_efficiency = 0;       // [-]   transmit optics, (0,1]
  double receive_efficiency = 0;        // [-]   receive optics, (0,1]
  double detector_efficiency = 0;       // [-]   detector quantum efficiency, (0,1]
  double atmospheric_transmission = 0;  // [-]   one-way, (0,1]
  double attenuation_factor = 0;        // [-]   linear residual-loss factor, (0,1]
  double transmit_divergence_rad = 0;   // [rad] full transmit divergence
  double retro_divergence_rad = 0;      // [rad] retroreflector diffraction angle
};

/// All link-budget outputs for one parameter set.
struct LinkBudgetReport {
  double uplink_geometry = 0;        // [-] 4 A_s / (pi theta_t^2 R^2)
  double uplink_attenuation = 0;     // [-] one-way ground-to-satellite
  double photons_at_satellite = 0;   // [-] mean photons per pulse at the satellite
  double downlink_geometry = 0;      // [-] 4 A_r / (pi theta_s^2 R^2)
  double downlink_attenuation = 0;   // [-] one-way satellite-to-ground
  double detections_per_pulse = 0;   // [-] mean detections per pulse at ground
  double predicted_rate_cps = 0;     // [1/s] detections_per_pulse * rate * duty
};

/// Throws InvalidParameterError naming the offending field. The
/// photons_per_joule value must agree with wavelength_m via lambda/(h c)
/// to within 1%.
void validate_channel_params(const ChannelParams& params);

/// lambda/(h c) for an optical-band wavelength (100 nm .. 10 um).
double photons_per_joule(double wavelength_m);

/// Attenuation helpers; dB is positive for loss (13 dB -> ~0.05).
double attenuation_db_to_linear(double db);
double attenuation_linear_to_db(double linear);

double uplink_attenuation(const ChannelParams& params);
double photons_at_satellite(const ChannelParams& params);
double downlink_attenuation(const ChannelParams& params);
double expected_detections_per_pulse(const ChannelParams& params);

/// Assembles the full report. `duty` is the detection duty fraction used
/// for the predicted count rate (1 for an ungated link).
LinkBudgetReport link_budget(const ChannelParams& params, double duty = 1.0);

}  // namespace satlink
