// SPDX-License-Identifier: Apache-2.0

#include "satlink/photonsim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <string>

namespace satlink {

namespace {

constexpr double kPsPerSecond = 1e12;

// splitmix64 (Steele, Lea, Flood 2014); also the conventional seeder for
// 64-bit generators.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform in [0, 1) with 53 random bits; identical across platforms for a
// given engine stream, unlike the std distributions.
double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes exactly two engine outputs.
double standard_normal(std::mt19937_64& eng) {
  const double u1 = 1.0 - uniform01(eng);  // (0, 1]
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

bool gating_disabled(const SimConfig& c) {
  return c.chopper_open_s == c.chopper_period_s;
}

double fold_phase(const SimConfig& c, double t_s) {
  double x = std::fmod(t_s - c.chopper_phase_s, c.chopper_period_s);
  if (x < 0.0) x += c.chopper_period_s;
  if (x >= c.chopper_period_s) x -= c.chopper_period_s;
  return x;
}

std::int64_t tdc_step_ps(const SimConfig& c) {
  return static_cast<std::int64_t>(std::llround(c.tdc_resolution_s * kPsPerSecond));
}

std::uint64_t quantize_ps(double t_s, std::int64_t step_ps) {
  const double steps = std::floor(t_s * kPsPerSecond / static_cast<double>(step_ps));
  return static_cast<std::uint64_t>(steps) * static_cast<std::uint64_t>(step_ps);
}

// Number of pulse slots k with t0 = k / rate inside [0, duration); the
// fractional tail slot is dropped so the count is floor(duration * rate).
std::uint64_t total_pulse_slots(const SimConfig& c) {
  const double slots = c.duration_s * c.channel.pulse_rate_hz;
  const double rounded = std::floor(slots + 0.5);
  if (std::abs(slots - rounded) < 1e-6 * std::max(1.0, slots)) {
    return static_cast<std::uint64_t>(rounded);
  }
  return static_cast<std::uint64_t>(std::floor(slots));
}

struct ChunkContext {
  const SimConfig* config;
  const RangeModel* model;
  double detection_prob;   // 1 - exp(-N) per pulse
  double jitter_sigma_s;   // composed Gaussian sigma
  std::int64_t step_ps;
  std::uint64_t total_slots;
};

// Signal hits in slot range [k_begin, k_end) via geometric skipping: the
// number of Bernoulli(p) failures before the next success is
// floor(log(u) / log(1-p)), which preserves the exact per-slot marginals.
void scan_slots(const ChunkContext& ctx, std::uint64_t k_begin,
                std::uint64_t k_end, std::mt19937_64& eng,
                std::vector<TimeTag>& out) {
  const SimConfig& cfg = *ctx.config;
  const double rate = cfg.channel.pulse_rate_hz;
  const double p = ctx.detection_prob;
  if (p <= 0.0 || k_begin >= k_end) return;

  const bool certain = p >= 1.0;
  const double log_q = certain ? 0.0 : std::log1p(-p);

  std::uint64_t k = k_begin;
  while (k < k_end) {
    std::uint64_t hit = k;
    if (!certain) {
      const double u = uniform01(eng);
      // log(0) = -inf makes the skip infinite, ending the window.
      const double skip = std::floor(std::log(u) / log_q);
      if (!(skip < static_cast<double>(k_end - k))) break;
      hit = k + static_cast<std::uint64_t>(skip);
    }

    const double t0 = static_cast<double>(hit) / rate;
    double t = t0 + roundtrip_at(*ctx.model, t0);
    if (ctx.jitter_sigma_s > 0.0) {
      t += ctx.jitter_sigma_s * standard_normal(eng);
    }
    if (t >= 0.0 && (gating_disabled(cfg) || chopper_open(cfg, t))) {
      out.push_back({Channel::detection, quantize_ps(t, ctx.step_ps)});
    }
    k = hit + 1;
  }
}

std::vector<TimeTag> simulate_chunk(const ChunkContext& ctx,
                                    std::uint64_t chunk_index,
                                    double chunk_start, double chunk_end) {
  const SimConfig& cfg = *ctx.config;
  std::mt19937_64 eng(derive_chunk_seed(cfg.seed, chunk_index));
  std::vector<TimeTag> tags;

  const double rate = cfg.channel.pulse_rate_hz;
  const auto slots_from = [&](double t) {
    if (t <= 0.0) return std::uint64_t{0};
    const double k = std::ceil(t * rate);
    return k >= static_cast<double>(ctx.total_slots)
               ? ctx.total_slots
               : static_cast<std::uint64_t>(k);
  };

  if (gating_disabled(cfg)) {
    scan_slots(ctx, slots_from(chunk_start), slots_from(chunk_end), eng, tags);
  } else {
    // Transmit windows of every chopper period overlapping this chunk.
    const double tau = cfg.chopper_period_s;
    const double open_from = cfg.chopper_phase_s + 0.5 * tau;
    const double open_to = cfg.chopper_phase_s + tau - cfg.chopper_guard_s;
    const auto m_lo =
        static_cast<std::int64_t>(std::floor((chunk_start - open_to) / tau)) - 1;
    const auto m_hi =
        static_cast<std::int64_t>(std::floor((chunk_end - open_from) / tau)) + 1;
    for (std::int64_t m = m_lo; m <= m_hi; ++m) {
      const double a = std::max(chunk_start, open_from + static_cast<double>(m) * tau);
      const double b = std::min(chunk_end, open_to + static_cast<double>(m) * tau);
      if (a < b) scan_slots(ctx, slots_from(a), slots_from(b), eng, tags);
    }
  }

  if (cfg.background_rate_cps > 0.0) {
    double t = chunk_start;
    while (true) {
      t += -std::log1p(-uniform01(eng)) / cfg.background_rate_cps;
      if (!(t < chunk_end)) break;
      if (t >= 0.0 && (gating_disabled(cfg) || chopper_open(cfg, t))) {
        tags.push_back({Channel::detection, quantize_ps(t, ctx.step_ps)});
      }
    }
  }

  return tags;
}

}  // namespace

std::uint64_t derive_chunk_seed(std::uint64_t seed, std::uint64_t chunk_index) {
  std::uint64_t state = seed;
  std::uint64_t value = 0;
  for (std::uint64_t i = 0; i <= chunk_index; ++i) value = splitmix64(state);
  return value;
}

void validate_sim_config(const SimConfig& c) {
  validate_channel_params(c.channel);
  const auto bad = [](const std::string& what) {
    throw InvalidParameterError(what);
  };
  if (!(std::isfinite(c.chopper_period_s) && c.chopper_period_s > 0.0))
    bad("chopper_period_s must be strictly positive");
  if (!(std::isfinite(c.chopper_open_s) && c.chopper_open_s > 0.0 &&
        c.chopper_open_s <= c.chopper_period_s))
    bad("chopper_open_s must lie in (0, chopper_period_s]");
  if (!std::isfinite(c.chopper_phase_s)) bad("chopper_phase_s must be finite");
  if (!(std::isfinite(c.chopper_guard_s) && c.chopper_guard_s >= 0.0 &&
        c.chopper_guard_s < 0.5 * c.chopper_period_s))
    bad("chopper_guard_s must lie in [0, chopper_period_s / 2)");
  if (!(std::isfinite(c.background_rate_cps) && c.background_rate_cps >= 0.0))
    bad("background_rate_cps must be >= 0");
  for (double f : c.jitter_fwhm_components_s) {
    if (!(std::isfinite(f) && f >= 0.0))
      bad("jitter_fwhm_components_s entries must be >= 0");
  }
  if (!(std::isfinite(c.tdc_resolution_s) && c.tdc_resolution_s > 0.0))
    bad("tdc_resolution_s must be strictly positive");
  const double steps = c.tdc_resolution_s * kPsPerSecond;
  const double rounded = std::floor(steps + 0.5);
  if (rounded < 1.0 || std::abs(steps - rounded) > 1e-6)
    bad("tdc_resolution_s must be a whole number of picoseconds");
  if (!(std::isfinite(c.duration_s) && c.duration_s > 0.0))
    bad("duration_s must be strictly positive");
}

double duty_fraction(const SimConfig& c) {
  return c.chopper_open_s / c.chopper_period_s;
}

bool chopper_open(const SimConfig& c, double t_s) {
  if (gating_disabled(c)) return true;
  return fold_phase(c, t_s) < c.chopper_open_s;
}

bool transmit_open(const SimConfig& c, double t_s) {
  if (gating_disabled(c)) return true;
  const double x = fold_phase(c, t_s);
  return x >= 0.5 * c.chopper_period_s &&
         x < c.chopper_period_s - c.chopper_guard_s;
}

double compose_jitter(std::span<const double> fwhm_components_s) {
  double sum_sq = 0.0;
  for (double f : fwhm_components_s) {
    if (!(std::isfinite(f) && f >= 0.0)) {
      throw InvalidParameterError("jitter FWHM components must be >= 0");
    }
    sum_sq += f * f;
  }
  return std::sqrt(sum_sq);
}

std::vector<TimeTag> simulate_pass(const SimConfig& config,
                                   const RangeModel& model,
                                   const SimulateOptions& options) {
  validate_sim_config(config);
  if (!(model.t_min_s() <= 0.0 && model.t_max_s() >= config.duration_s)) {
    throw DomainError("range model domain [" + std::to_string(model.t_min_s()) +
                      ", " + std::to_string(model.t_max_s()) +
                      "] s does not cover the simulated span [0, " +
                      std::to_string(config.duration_s) + "] s");
  }

  constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

  ChunkContext ctx;
  ctx.config = &config;
  ctx.model = &model;
  ctx.detection_prob = -std::expm1(-expected_detections_per_pulse(config.channel));
  ctx.jitter_sigma_s = compose_jitter(config.jitter_fwhm_components_s) / kFwhmPerSigma;
  ctx.step_ps = tdc_step_ps(config);
  ctx.total_slots = total_pulse_slots(config);

  // Refuse streams whose expected size already exceeds the cap; the exact
  // count is re-checked after generation.
  const double tx_fraction =
      gating_disabled(config)
          ? 1.0
          : (0.5 * config.chopper_period_s - config.chopper_guard_s) /
                config.chopper_period_s;
  const double expected_tags =
      static_cast<double>(ctx.total_slots) * tx_fraction * ctx.detection_prob +
      config.background_rate_cps * config.duration_s;
  if (expected_tags > static_cast<double>(options.max_tags)) {
    throw ResourceError("expected stream length " +
                        std::to_string(expected_tags) +
                        " exceeds the cap of " + std::to_string(options.max_tags));
  }

  const double tau = config.chopper_period_s;
  const auto n_chunks = static_cast<std::uint64_t>(
      std::max(1.0, std::ceil(config.duration_s / tau)));

  std::vector<std::vector<TimeTag>> per_chunk(n_chunks);
  const auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const double start = static_cast<double>(i) * tau;
      const double end_t =
          std::min(static_cast<double>(i + 1) * tau, config.duration_s);
      per_chunk[i] = simulate_chunk(ctx, i, start, end_t);
    }
  };

  const unsigned workers =
      std::max(1u, std::min(options.threads,
                            static_cast<unsigned>(std::min<std::uint64_t>(
                                n_chunks, 1024))));
  if (workers == 1) {
    run_range(0, n_chunks);
  } else {
    const std::uint64_t per_worker = (n_chunks + workers - 1) / workers;
    std::vector<std::future<void>> futures;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = static_cast<std::uint64_t>(w) * per_worker;
      const std::uint64_t end = std::min<std::uint64_t>(begin + per_worker, n_chunks);
      if (begin >= end) break;
      futures.push_back(
          std::async(std::launch::async, [&, begin, end] { run_range(begin, end); }));
    }
    for (auto& f : futures) f.get();
  }

  std::size_t total = 0;
  for (const auto& chunk : per_chunk) total += chunk.size();
  if (total > options.max_tags) {
    throw ResourceError("stream length " + std::to_string(total) +
                        " exceeds the cap of " + std::to_string(options.max_tags));
  }

  std::vector<TimeTag> tags;
  tags.reserve(total);
  for (const auto& chunk : per_chunk) {
    tags.insert(tags.end(), chunk.begin(), chunk.end());
  }
  // Arrivals from late slots of one chopper period may land after early
  // arrivals of the next; a global stable sort fixes the order identically
  // for serial and chunk-parallel generation.
  std::stable_sort(tags.begin(), tags.end(),
                   [](const TimeTag& a, const TimeTag& b) {
                     return a.timestamp_ps < b.timestamp_ps;
                   });
  return tags;
}

}  // namespace satlink
