// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satlink/linkbudget.hpp"
#include "satlink/orbit.hpp"

namespace satlink {

enum class Channel : std::uint8_t { detection = 0 };

/// One detector event. Timestamps count picoseconds since the pass epoch
/// and are always exact multiples of the configured TDC resolution.
struct TimeTag {
  Channel channel = Channel::detection;
  std::uint64_t timestamp_ps = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Monte Carlo configuration for one simulated pass.
///
/// The chopper splits each period into a detection gate
/// [phase, phase + open) and a transmit window occupying the second half
/// of the period, shortened by a guard so that near-field backscatter from
/// the last pulses has cleared before the gate reopens. Setting
/// chopper_open_s == chopper_period_s disables gating entirely (detection
/// always live, every pulse slot emitted).
struct SimConfig {
  ChannelParams channel;
  double chopper_period_s = 16e-3;   // [s] tau
  double chopper_open_s = 1.65e-3;   // [s] tau0, detection gate width
  double chopper_phase_s = 0.0;      // [s] gate start offset within period
  double chopper_guard_s = 200e-6;   // [s] transmit cut-off before period end
  double background_rate_cps = 0.0;  // [1/s] dark + stray light, full-rate
  std::vector<double> jitter_fwhm_components_s;  // [s] Gaussian FWHM terms
  double tdc_resolution_s = 1e-12;   // [s] timestamp quantization step
  double duration_s = 0.0;           // [s] simulated wall-clock span
  std::uint64_t seed = 0;            // RNG seed
};

struct SimulateOptions {
  unsigned threads = 1;               // chunk workers; output independent of this
  std::uint64_t max_tags = 100'000'000;  // resource cap on the stream length
};

/// RNG scheme identifier recorded in output metadata. Chunk k of a stream
/// uses std::mt19937_64 seeded with the k-th splitmix64 output of the
/// global seed, so chunked parallel generation is bit-reproducible.
inline constexpr const char* kRngAlgorithm = "splitmix64-chunk-seeded mt19937_64";

/// The k-th 64-bit seed derived from `seed` by the splitmix64 sequence.
std::uint64_t derive_chunk_seed(std::uint64_t seed, std::uint64_t chunk_index);

/// Throws InvalidParameterError naming the offending field.
void validate_sim_config(const SimConfig& config);

/// Detection duty fraction chopper_open_s / chopper_period_s.
double duty_fraction(const SimConfig& config);

/// True iff the detection gate is open at t (gate-relative fold of t).
bool chopper_open(const SimConfig& config, double t_s);

/// True iff pulse emission is enabled at t.
bool transmit_open(const SimConfig& config, double t_s);

/// Quadrature sum sqrt(sum f_i^2) of Gaussian FWHM contributions.
double compose_jitter(std::span<const double> fwhm_components_s);

/// Generates the merged, time-sorted detector stream for one pass:
/// per-pulse detections with probability 1 - exp(-N) at
/// t0 + roundtrip(t0) + Gaussian jitter, plus gated Poisson background,
/// all quantized to the TDC grid. Identical (config, model) inputs yield
/// bit-identical streams for any thread count.
std::vector<TimeTag> simulate_pass(const SimConfig& config,
                                   const RangeModel& model,
                                   const SimulateOptions& options = {});

}  // namespace satlink
