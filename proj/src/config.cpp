// SPDX-License-Identifier: Apache-2.0

#include "satlink/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "satlink/version.hpp"

namespace satlink {

namespace {

double require_number(const json& obj, const std::string& key,
                      const std::string& scope) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw InvalidParameterError(scope + key + ": missing required key");
  }
  if (!it->is_number()) {
    throw InvalidParameterError(scope + key + ": expected a number");
  }
  return it->get<double>();
}

double optional_number(const json& obj, const std::string& key,
                       const std::string& scope, double fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) {
    throw InvalidParameterError(scope + key + ": expected a number");
  }
  return it->get<double>();
}

// Fields that may alternatively be given as "<name>_db" (positive loss dB).
const std::set<std::string> kDbCapableFields = {
    "transmit_efficiency", "receive_efficiency", "detector_efficiency",
    "atmospheric_transmission", "attenuation_factor"};

double linear_or_db(const json& obj, const std::string& key,
                    const std::string& scope) {
  const bool has_linear = obj.contains(key);
  const bool has_db = obj.contains(key + "_db");
  if (has_linear && has_db) {
    throw InvalidParameterError(scope + key + ": given both linear and _db forms");
  }
  if (has_db) {
    return attenuation_db_to_linear(require_number(obj, key + "_db", scope));
  }
  return require_number(obj, key, scope);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& scope) {
  for (const auto& [key, value] : obj.items()) {
    if (known.contains(key)) continue;
    std::string base = key;
    if (base.size() > 3 && base.ends_with("_db")) {
      base.resize(base.size() - 3);
      if (kDbCapableFields.contains(base) && known.contains(base)) continue;
    }
    throw InvalidParameterError(scope + key + ": unknown key");
  }
}

}  // namespace

ChannelParams channel_params_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw InvalidParameterError("channel parameters must be a JSON object");
  }
  const std::string scope = "channel.";
  const std::set<std::string> known = {
      "pulse_rate_hz",        "pulse_energy_j",
      "photons_per_joule",    "wavelength_m",
      "range_m",              "retroreflector_area_m2",
      "receiver_area_m2",     "transmit_efficiency",
      "receive_efficiency",   "detector_efficiency",
      "atmospheric_transmission", "attenuation_factor",
      "transmit_divergence_rad",  "retro_divergence_rad"};
  reject_unknown_keys(doc, known, scope);

  ChannelParams p;
  p.pulse_rate_hz = require_number(doc, "pulse_rate_hz", scope);
  p.pulse_energy_j = require_number(doc, "pulse_energy_j", scope);
  p.photons_per_joule = require_number(doc, "photons_per_joule", scope);
  p.wavelength_m = require_number(doc, "wavelength_m", scope);
  p.range_m = require_number(doc, "range_m", scope);
  p.retroreflector_area_m2 = require_number(doc, "retroreflector_area_m2", scope);
  p.receiver_area_m2 = require_number(doc, "receiver_area_m2", scope);
  p.transmit_efficiency = linear_or_db(doc, "transmit_efficiency", scope);
  p.receive_efficiency = linear_or_db(doc, "receive_efficiency", scope);
  p.detector_efficiency = linear_or_db(doc, "detector_efficiency", scope);
  p.atmospheric_transmission = linear_or_db(doc, "atmospheric_transmission", scope);
  p.attenuation_factor = linear_or_db(doc, "attenuation_factor", scope);
  p.transmit_divergence_rad = require_number(doc, "transmit_divergence_rad", scope);
  p.retro_divergence_rad = require_number(doc, "retro_divergence_rad", scope);
  validate_channel_params(p);
  return p;
}

json channel_params_to_json(const ChannelParams& p) {
  json doc;
  doc["pulse_rate_hz"] = p.pulse_rate_hz;
  doc["pulse_energy_j"] = p.pulse_energy_j;
  doc["photons_per_joule"] = p.photons_per_joule;
  doc["wavelength_m"] = p.wavelength_m;
  doc["range_m"] = p.range_m;
  doc["retroreflector_area_m2"] = p.retroreflector_area_m2;
  doc["receiver_area_m2"] = p.receiver_area_m2;
  doc["transmit_efficiency"] = p.transmit_efficiency;
  doc["receive_efficiency"] = p.receive_efficiency;
  doc["detector_efficiency"] = p.detector_efficiency;
  doc["atmospheric_transmission"] = p.atmospheric_transmission;
  doc["attenuation_factor"] = p.attenuation_factor;
  doc["transmit_divergence_rad"] = p.transmit_divergence_rad;
  doc["retro_divergence_rad"] = p.retro_divergence_rad;
  return doc;
}

SimConfig sim_config_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw InvalidParameterError("simulation config must be a JSON object");
  }
  const std::string scope = "";
  const std::set<std::string> known = {
      "channel",           "chopper_period_s", "chopper_open_s",
      "chopper_phase_s",   "chopper_guard_s",  "background_rate_cps",
      "jitter_fwhm_components_s", "tdc_resolution_s", "duration_s", "seed"};
  reject_unknown_keys(doc, known, scope);
  if (!doc.contains("channel")) {
    throw InvalidParameterError("channel: missing required key");
  }

  SimConfig c;
  c.channel = channel_params_from_json(doc.at("channel"));
  c.chopper_period_s = optional_number(doc, "chopper_period_s", scope, 16e-3);
  c.chopper_open_s = optional_number(doc, "chopper_open_s", scope, 1.65e-3);
  c.chopper_phase_s = optional_number(doc, "chopper_phase_s", scope, 0.0);
  c.chopper_guard_s = optional_number(doc, "chopper_guard_s", scope, 200e-6);
  c.background_rate_cps = optional_number(doc, "background_rate_cps", scope, 0.0);
  if (doc.contains("jitter_fwhm_components_s")) {
    const auto& arr = doc.at("jitter_fwhm_components_s");
    if (!arr.is_array()) {
      throw InvalidParameterError(
          "jitter_fwhm_components_s: expected an array of numbers");
    }
    for (const auto& v : arr) {
      if (!v.is_number()) {
        throw InvalidParameterError(
            "jitter_fwhm_components_s: expected an array of numbers");
      }
      c.jitter_fwhm_components_s.push_back(v.get<double>());
    }
  }
  c.tdc_resolution_s = optional_number(doc, "tdc_resolution_s", scope, 1e-12);
  c.duration_s = optional_number(doc, "duration_s", scope, 10.0);
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_integer() && !s.is_number_unsigned()) {
      throw InvalidParameterError("seed: expected an integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  validate_sim_config(c);
  return c;
}

json sim_config_to_json(const SimConfig& c) {
  json doc;
  doc["channel"] = channel_params_to_json(c.channel);
  doc["chopper_period_s"] = c.chopper_period_s;
  doc["chopper_open_s"] = c.chopper_open_s;
  doc["chopper_phase_s"] = c.chopper_phase_s;
  doc["chopper_guard_s"] = c.chopper_guard_s;
  doc["background_rate_cps"] = c.background_rate_cps;
  doc["jitter_fwhm_components_s"] = c.jitter_fwhm_components_s;
  doc["tdc_resolution_s"] = c.tdc_resolution_s;
  doc["duration_s"] = c.duration_s;
  doc["seed"] = c.seed;
  return doc;
}

json range_model_to_json(const RangeModel& model) {
  json doc;
  doc["basis"] = "power-normalized";
  doc["degree"] = model.degree();
  doc["domain_s"] = {model.t_min_s(), model.t_max_s()};
  std::vector<double> coeffs(model.coefficients().data(),
                             model.coefficients().data() +
                                 model.coefficients().size());
  doc["coefficients"] = coeffs;
  doc["residual_rms_s"] = model.residual_rms_s();
  return doc;
}

RangeModel range_model_from_json(const json& doc) {
  const json& body = doc.contains("model") ? doc.at("model") : doc;
  if (!body.is_object() || !body.contains("coefficients") ||
      !body.contains("domain_s")) {
    throw FormatError("range model document needs coefficients and domain_s");
  }
  if (body.contains("basis") && body.at("basis") != "power-normalized") {
    throw FormatError("unsupported range model basis");
  }
  const auto& arr = body.at("coefficients");
  const auto& dom = body.at("domain_s");
  if (!arr.is_array() || arr.empty() || !dom.is_array() || dom.size() != 2) {
    throw FormatError("malformed range model document");
  }
  Eigen::VectorXd coeffs(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw FormatError("coefficients must be numbers");
    coeffs[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  const double residual = body.value("residual_rms_s", 0.0);
  return RangeModel(coeffs, dom[0].get<double>(), dom[1].get<double>(), residual);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidParameterError("cannot open file for digest: " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setfill('0') << std::setw(16)
      << fnv1a64(bytes);
  return out.str();
}

json make_manifest(const std::string& command, const json& resolved_config,
                   std::span<const ManifestInput> inputs,
                   std::optional<std::uint64_t> seed,
                   std::span<const std::string> outputs) {
  json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["command"] = command;
  if (seed.has_value()) {
    manifest["seed"] = *seed;
  } else {
    manifest["seed"] = nullptr;
  }
  json input_list = json::array();
  for (const auto& input : inputs) {
    json entry;
    entry["path"] = input.path;
    entry["digest"] = input.digest;
    input_list.push_back(entry);
  }
  manifest["inputs"] = input_list;
  manifest["outputs"] = json(std::vector<std::string>(outputs.begin(), outputs.end()));
  manifest["config"] = resolved_config;
  return manifest;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidParameterError("cannot open file: " + path.string());
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw FormatError("not valid JSON: " + path.string());
  }
  return doc;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidParameterError("cannot open file for writing: " + path.string());
  }
  out << text;
  if (!out) {
    throw InvalidParameterError("failed writing file: " + path.string());
  }
}

}  // namespace satlink
