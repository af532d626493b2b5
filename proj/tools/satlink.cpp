// SPDX-License-Identifier: Apache-2.0
//
// satlink: simulator and analysis toolkit for satellite-to-ground
// single-photon transmission. Subcommands cover the full workflow:
//
//   synth-pass  generate synthetic pass range samples (CSV)
//   fit-range   fit a round-trip-time polynomial to range samples
//   budget      evaluate the optical link budget from a channel config
//   simulate    produce a detector time-tag stream (QTT1) for one pass
//   analyze     offsets -> histogram -> Gaussian fit -> rates -> SNR

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "satlink/config.hpp"
#include "satlink/linkbudget.hpp"
#include "satlink/orbit.hpp"
#include "satlink/photonsim.hpp"
#include "satlink/syncanalysis.hpp"
#include "satlink/tagio.hpp"
#include "satlink/version.hpp"

namespace fs = std::filesystem;
using satlink::json;

namespace {

struct GlobalFlags {
  std::string out;
  bool csv = false;
  bool quiet = false;
  std::optional<std::uint64_t> seed;
};

// Inputs that are not found as given are also looked up in
// $SATLINK_CONFIG_DIR, so bundled configs can be referenced by name.
fs::path resolve_input(const std::string& given) {
  fs::path path(given);
  if (fs::exists(path)) return path;
  if (const char* dir = std::getenv("SATLINK_CONFIG_DIR")) {
    const fs::path alt = fs::path(dir) / path;
    if (fs::exists(alt)) return alt;
  }
  return path;
}

void print_value(const char* key, double value) {
  std::printf("%-24s %.6e\n", key, value);
}

satlink::ManifestInput manifest_input(const fs::path& path) {
  return {path.string(), satlink::file_digest(path)};
}

void write_json_doc(const fs::path& path, const json& doc) {
  satlink::write_text_file(path, doc.dump(2) + "\n");
}

json fit_to_json(const satlink::GaussianFitResult& fit) {
  json doc;
  doc["amplitude"] = fit.amplitude;
  doc["mean_s"] = fit.mean_s;
  doc["sigma_s"] = fit.sigma_s;
  doc["baseline"] = fit.baseline;
  doc["fwhm_s"] = fit.fwhm_s;
  doc["sigma_stderr_s"] = fit.sigma_stderr_s;
  doc["fwhm_stderr_s"] = fit.fwhm_stderr_s;
  doc["converged"] = fit.converged;
  doc["degenerate"] = fit.degenerate;
  doc["iterations"] = fit.iterations;
  return doc;
}

int run_budget(const std::string& config_arg, std::optional<double> duty_flag,
               const GlobalFlags& flags) {
  const fs::path config_path = resolve_input(config_arg);
  const json doc = satlink::read_json_file(config_path);

  satlink::ChannelParams params;
  double duty = 1.0;
  json resolved;
  if (doc.contains("channel")) {
    const satlink::SimConfig sim = satlink::sim_config_from_json(doc);
    params = sim.channel;
    duty = satlink::duty_fraction(sim);
    resolved = satlink::sim_config_to_json(sim);
  } else {
    params = satlink::channel_params_from_json(doc);
    resolved = satlink::channel_params_to_json(params);
  }
  if (duty_flag) duty = *duty_flag;

  const satlink::LinkBudgetReport report = satlink::link_budget(params, duty);
  if (!flags.quiet) {
    print_value("uplink_geometry", report.uplink_geometry);
    print_value("uplink_attenuation", report.uplink_attenuation);
    print_value("photons_at_satellite", report.photons_at_satellite);
    print_value("downlink_geometry", report.downlink_geometry);
    print_value("downlink_attenuation", report.downlink_attenuation);
    print_value("detections_per_pulse", report.detections_per_pulse);
    print_value("predicted_rate_cps", report.predicted_rate_cps);
  }

  if (!flags.out.empty()) {
    const std::vector<satlink::ManifestInput> inputs = {
        manifest_input(config_path)};
    const std::vector<std::string> outputs = {flags.out};
    json out_doc;
    json config_echo = resolved;
    config_echo["duty"] = duty;
    out_doc["manifest"] = satlink::make_manifest("budget", config_echo, inputs,
                                                 std::nullopt, outputs);
    json body;
    body["uplink_geometry"] = report.uplink_geometry;
    body["uplink_attenuation"] = report.uplink_attenuation;
    body["photons_at_satellite"] = report.photons_at_satellite;
    body["downlink_geometry"] = report.downlink_geometry;
    body["downlink_attenuation"] = report.downlink_attenuation;
    body["detections_per_pulse"] = report.detections_per_pulse;
    body["predicted_rate_cps"] = report.predicted_rate_cps;
    out_doc["report"] = body;
    write_json_doc(flags.out, out_doc);
  }
  return 0;
}

int run_fit_range(const std::string& input_arg, int degree,
                  const GlobalFlags& flags) {
  const fs::path input_path = resolve_input(input_arg);
  std::ifstream in(input_path);
  if (!in) {
    throw satlink::InvalidParameterError("cannot open file: " +
                                         input_path.string());
  }
  const auto samples = satlink::read_range_samples_csv(in);
  const satlink::RangeModel model = satlink::fit_range(samples, degree);

  if (!flags.quiet) {
    std::printf("fitted degree %d over [%.6f, %.6f] s, residual_rms_s %.3e\n",
                model.degree(), model.t_min_s(), model.t_max_s(),
                model.residual_rms_s());
  }

  const std::string out = flags.out.empty() ? "model.json" : flags.out;
  const std::vector<satlink::ManifestInput> inputs = {
      manifest_input(input_path)};
  const std::vector<std::string> outputs = {out};
  json config_echo;
  config_echo["degree"] = degree;
  json doc;
  doc["manifest"] = satlink::make_manifest("fit-range", config_echo, inputs,
                                           std::nullopt, outputs);
  doc["model"] = satlink::range_model_to_json(model);
  write_json_doc(out, doc);
  return 0;
}

int run_synth_pass(double altitude_m, double speed_mps, double closest_approach_s,
                   double duration_s, double interval_s,
                   const GlobalFlags& flags) {
  const auto samples = satlink::synth_pass(altitude_m, speed_mps,
                                           closest_approach_s, duration_s,
                                           interval_s);
  if (flags.out.empty()) {
    std::ostringstream text;
    satlink::write_range_samples_csv(text, samples);
    std::fputs(text.str().c_str(), stdout);
  } else {
    std::ostringstream text;
    satlink::write_range_samples_csv(text, samples);
    satlink::write_text_file(flags.out, text.str());
    if (!flags.quiet) {
      std::printf("wrote %zu range samples to %s\n", samples.size(),
                  flags.out.c_str());
    }
  }
  return 0;
}

int run_simulate(const std::string& config_arg, const std::string& model_arg,
                 std::optional<double> duration, unsigned threads,
                 const GlobalFlags& flags) {
  const fs::path config_path = resolve_input(config_arg);
  const fs::path model_path = resolve_input(model_arg);

  satlink::SimConfig config =
      satlink::sim_config_from_json(satlink::read_json_file(config_path));
  if (duration) config.duration_s = *duration;
  if (flags.seed) config.seed = *flags.seed;
  satlink::validate_sim_config(config);

  const satlink::RangeModel model =
      satlink::range_model_from_json(satlink::read_json_file(model_path));

  satlink::SimulateOptions options;
  options.threads = threads;
  const auto tags = satlink::simulate_pass(config, model, options);

  const std::string out = flags.out.empty() ? "tags.qtt1" : flags.out;
  const std::vector<satlink::ManifestInput> inputs = {
      manifest_input(config_path), manifest_input(model_path)};
  std::vector<std::string> outputs = {out};
  fs::path csv_path;
  if (flags.csv) {
    csv_path = fs::path(out);
    csv_path.replace_extension(".csv");
    outputs.push_back(csv_path.string());
  }

  json header;
  header["format"] = "QTT1";
  header["epoch_s"] = 0.0;
  header["rng"] = satlink::kRngAlgorithm;
  header["config"] = satlink::sim_config_to_json(config);
  header["manifest"] = satlink::make_manifest(
      "simulate", satlink::sim_config_to_json(config), inputs, config.seed,
      outputs);

  std::ofstream binary(out, std::ios::binary);
  if (!binary) {
    throw satlink::InvalidParameterError("cannot open file for writing: " + out);
  }
  satlink::write_qtt1(binary, header, tags);
  binary.close();

  if (flags.csv) {
    std::ostringstream text;
    satlink::write_tag_csv(text, tags);
    satlink::write_text_file(csv_path, text.str());
  }

  if (!flags.quiet) {
    std::printf("wrote %zu tags (%.1f s, seed %" PRIu64 ") to %s\n", tags.size(),
                config.duration_s, config.seed, out.c_str());
  }
  return 0;
}

int run_analyze(const std::string& tags_arg, const std::string& model_arg,
                double hist_bin_s, double signal_bin_s, double pulse_phase_s,
                std::optional<double> pulse_rate_flag,
                std::optional<double> duration_flag,
                std::optional<double> duty_flag,
                std::optional<double> background_flag,
                const GlobalFlags& flags) {
  const fs::path tags_path = resolve_input(tags_arg);
  const fs::path model_path = resolve_input(model_arg);

  std::vector<satlink::TimeTag> tags;
  std::optional<satlink::SimConfig> echo;
  if (tags_path.extension() == ".csv") {
    std::ifstream in(tags_path);
    if (!in) {
      throw satlink::InvalidParameterError("cannot open file: " +
                                           tags_path.string());
    }
    tags = satlink::read_tag_csv(in);
  } else {
    std::ifstream in(tags_path, std::ios::binary);
    if (!in) {
      throw satlink::InvalidParameterError("cannot open file: " +
                                           tags_path.string());
    }
    satlink::TagStream stream = satlink::read_qtt1(in);
    tags = std::move(stream.tags);
    if (stream.header.contains("config")) {
      echo = satlink::sim_config_from_json(stream.header.at("config"));
    }
  }

  const auto require_setting = [&](std::optional<double> flag, double from_echo,
                                   bool have_echo, const char* name) {
    if (flag) return *flag;
    if (have_echo) return from_echo;
    throw satlink::InvalidParameterError(
        std::string(name) + " is required when the tag file carries no config");
  };
  const bool have_echo = echo.has_value();
  const double pulse_rate = require_setting(
      pulse_rate_flag, have_echo ? echo->channel.pulse_rate_hz : 0.0, have_echo,
      "--pulse-rate");
  const double duration = require_setting(
      duration_flag, have_echo ? echo->duration_s : 0.0, have_echo, "--duration");
  const double duty = require_setting(
      duty_flag, have_echo ? satlink::duty_fraction(*echo) : 0.0, have_echo,
      "--duty");
  const double background =
      background_flag ? *background_flag
                      : (have_echo ? echo->background_rate_cps : 0.0);

  const satlink::RangeModel model =
      satlink::range_model_from_json(satlink::read_json_file(model_path));

  const auto offsets = satlink::compute_offsets(tags, model, pulse_rate,
                                                pulse_phase_s);
  const double period = 1.0 / pulse_rate;
  const auto hist =
      satlink::build_histogram(offsets.offsets, hist_bin_s, 0.5 * period);

  satlink::GaussianFitResult fit;
  bool fit_available = false;
  std::string fit_warning;
  try {
    fit = satlink::fit_gaussian(hist);
    fit_available = true;
    if (!fit.converged) fit_warning = "Gaussian fit did not converge";
    if (fit.degenerate) fit_warning = "Gaussian fit is degenerate";
  } catch (const satlink::InsufficientDataError& e) {
    fit_warning = e.what();
  }

  const satlink::RateReport rates = satlink::rate_report(
      tags.size(), duration, duty, pulse_rate, background);
  satlink::SnrReport snr_report;
  if (fit_available) {
    snr_report =
        satlink::snr(offsets.offsets, fit, signal_bin_s, pulse_rate, rates);
  } else {
    snr_report.signal_bin_width_s = signal_bin_s;
    snr_report.mean_rate_cps = rates.mean_rate_cps;
    snr_report.background_rate_cps = rates.background_rate_cps;
    snr_report.photons_per_pulse = rates.photons_per_pulse;
  }

  const std::string out = flags.out.empty() ? "report.json" : flags.out;
  fs::path hist_path(out);
  hist_path.replace_extension(".hist.csv");

  const std::vector<satlink::ManifestInput> inputs = {
      manifest_input(tags_path), manifest_input(model_path)};
  const std::vector<std::string> outputs = {out, hist_path.string()};
  json config_echo;
  config_echo["hist_bin_s"] = hist_bin_s;
  config_echo["signal_bin_s"] = signal_bin_s;
  config_echo["pulse_rate_hz"] = pulse_rate;
  config_echo["pulse_phase_s"] = pulse_phase_s;
  config_echo["duration_s"] = duration;
  config_echo["duty"] = duty;
  config_echo["background_rate_cps"] = background;

  json doc;
  doc["manifest"] = satlink::make_manifest("analyze", config_echo, inputs,
                                           std::nullopt, outputs);
  json offsets_doc;
  offsets_doc["count"] = offsets.offsets.size();
  offsets_doc["skipped_out_of_domain"] = offsets.skipped_out_of_domain;
  doc["offsets"] = offsets_doc;
  if (fit_available) {
    doc["gaussian_fit"] = fit_to_json(fit);
  } else {
    doc["gaussian_fit"] = nullptr;
  }
  if (!fit_warning.empty()) doc["warning"] = fit_warning;
  json rates_doc;
  rates_doc["mean_rate_cps"] = rates.mean_rate_cps;
  rates_doc["background_rate_cps"] = rates.background_rate_cps;
  rates_doc["photons_per_pulse"] = rates.photons_per_pulse;
  doc["rates"] = rates_doc;
  json snr_doc;
  snr_doc["signal_bin_width_s"] = snr_report.signal_bin_width_s;
  snr_doc["signal_counts"] = snr_report.signal_counts;
  snr_doc["background_counts"] = snr_report.background_counts;
  if (std::isfinite(snr_report.snr)) {
    snr_doc["snr"] = snr_report.snr;
  } else {
    snr_doc["snr"] = nullptr;
  }
  snr_doc["snr_infinite"] = snr_report.snr_infinite;
  doc["snr"] = snr_doc;
  doc["histogram_csv"] = hist_path.string();
  write_json_doc(out, doc);

  std::ostringstream hist_csv;
  hist_csv << "bin_center_s,count\n";
  hist_csv.precision(17);
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    hist_csv << hist.bin_center(i) << ',' << hist.counts[i] << '\n';
  }
  satlink::write_text_file(hist_path, hist_csv.str());

  if (!flags.quiet) {
    std::printf("offsets: %zu used, %zu outside model domain\n",
                offsets.offsets.size(), offsets.skipped_out_of_domain);
    if (fit_available) {
      std::printf("fwhm_s: %.4e +/- %.2e (converged=%d degenerate=%d)\n",
                  fit.fwhm_s, fit.fwhm_stderr_s, fit.converged ? 1 : 0,
                  fit.degenerate ? 1 : 0);
    }
    std::printf("mean_rate_cps: %.2f  background_rate_cps: %.2f\n",
                rates.mean_rate_cps, rates.background_rate_cps);
    std::printf("photons_per_pulse: %.4e%s\n",
                std::max(rates.photons_per_pulse, 0.0),
                rates.photons_per_pulse < 0.0 ? " (clamped; raw in report)" : "");
    if (snr_report.snr_infinite) {
      std::printf("snr: inf (no off-peak background)\n");
    } else {
      std::printf("snr: %.3f (N'=%.0f, N'_b=%.2f)\n", snr_report.snr,
                  snr_report.signal_counts, snr_report.background_counts);
    }
    if (!fit_warning.empty()) std::printf("warning: %s\n", fit_warning.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satellite-to-ground single-photon link simulator and analyzer"};
  app.set_version_flag("--version",
                       std::string(satlink::kToolName) + " " +
                           satlink::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_value, "override the RNG seed");
  app.add_option("--out", flags.out, "output file path");
  app.add_flag("--csv", flags.csv, "also write a CSV twin of binary output");
  app.add_flag("--quiet", flags.quiet, "suppress progress output");

  // budget
  std::string budget_config;
  double budget_duty = 0.0;
  auto* budget = app.add_subcommand(
      "budget", "evaluate the optical link budget from a channel config");
  budget->add_option("config", budget_config, "channel or pass config (JSON)")
      ->required();
  auto* duty_opt = budget->add_option(
      "--duty", budget_duty, "detection duty fraction for the rate prediction");

  // fit-range
  std::string fit_input;
  int fit_degree = 4;
  auto* fit = app.add_subcommand(
      "fit-range", "fit a round-trip-time polynomial to range samples");
  fit->add_option("samples", fit_input, "range sample CSV")->required();
  fit->add_option("--degree", fit_degree, "polynomial degree (default 4)");

  // synth-pass
  double sp_altitude = 330e3, sp_speed = 7700.0, sp_tca = 28.0,
         sp_duration = 15.0, sp_interval = 0.5;
  auto* synth = app.add_subcommand(
      "synth-pass", "generate synthetic flyover range samples");
  synth->add_option("--altitude", sp_altitude, "pass altitude [m]");
  synth->add_option("--speed", sp_speed, "ground-track speed [m/s]");
  synth->add_option("--closest-approach", sp_tca, "closest-approach epoch [s]");
  synth->add_option("--duration", sp_duration, "sampled span [s]");
  synth->add_option("--interval", sp_interval, "sample interval [s]");

  // simulate
  std::string sim_config, sim_model;
  double sim_duration = 0.0;
  unsigned sim_threads = 1;
  auto* simulate = app.add_subcommand(
      "simulate", "generate a detector time-tag stream (QTT1)");
  simulate->add_option("config", sim_config, "pass config (JSON)")->required();
  simulate->add_option("model", sim_model, "range model document (JSON)")
      ->required();
  auto* sim_duration_opt = simulate->add_option(
      "--duration", sim_duration, "override the simulated span [s]");
  simulate->add_option("--threads", sim_threads,
                       "chunk workers (output is identical for any count)");

  // analyze
  std::string an_tags, an_model;
  double an_hist_bin = 0.1e-9, an_signal_bin = 2e-9, an_pulse_phase = 0.0;
  double an_pulse_rate = 0.0, an_duration = 0.0, an_duty = 0.0,
         an_background = 0.0;
  auto* analyze = app.add_subcommand(
      "analyze", "offsets, histogram, Gaussian fit, rates and SNR");
  analyze->add_option("tags", an_tags, "tag stream (QTT1 or CSV)")->required();
  analyze->add_option("model", an_model, "range model document (JSON)")
      ->required();
  analyze->add_option("--hist-bin", an_hist_bin,
                      "offset histogram bin width [s] (default 0.1 ns)");
  analyze->add_option("--signal-bin", an_signal_bin,
                      "signal window width [s] (default 2 ns)");
  analyze->add_option("--pulse-phase", an_pulse_phase,
                      "pulse-train phase offset [s]");
  auto* an_rate_opt = analyze->add_option(
      "--pulse-rate", an_pulse_rate, "pulse rate [Hz] (CSV inputs)");
  auto* an_duration_opt = analyze->add_option(
      "--duration", an_duration, "acquisition span [s] (CSV inputs)");
  auto* an_duty_opt =
      analyze->add_option("--duty", an_duty, "detection duty (CSV inputs)");
  auto* an_background_opt = analyze->add_option(
      "--background", an_background, "background rate [cps]");

  try {
    app.parse(argc, argv);
    if (seed_opt->count() > 0) flags.seed = seed_value;

    if (budget->parsed()) {
      return run_budget(budget_config,
                        duty_opt->count() ? std::optional(budget_duty)
                                          : std::nullopt,
                        flags);
    }
    if (fit->parsed()) {
      return run_fit_range(fit_input, fit_degree, flags);
    }
    if (synth->parsed()) {
      return run_synth_pass(sp_altitude, sp_speed, sp_tca, sp_duration,
                            sp_interval, flags);
    }
    if (simulate->parsed()) {
      return run_simulate(sim_config, sim_model,
                          sim_duration_opt->count()
                              ? std::optional(sim_duration)
                              : std::nullopt,
                          sim_threads, flags);
    }
    if (analyze->parsed()) {
      return run_analyze(
          an_tags, an_model, an_hist_bin, an_signal_bin, an_pulse_phase,
          an_rate_opt->count() ? std::optional(an_pulse_rate) : std::nullopt,
          an_duration_opt->count() ? std::optional(an_duration) : std::nullopt,
          an_duty_opt->count() ? std::optional(an_duty) : std::nullopt,
          an_background_opt->count() ? std::optional(an_background)
                                     : std::nullopt,
          flags);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const satlink::InvalidParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const satlink::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
