// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satlink/orbit.hpp"
#include "satlink/photonsim.hpp"

namespace satlink {

using json = nlohmann::ordered_json;

/// Strict key-exact parsing; unknown keys and missing required keys raise
/// InvalidParameterError naming the key. Attenuation-like fields also
/// accept a "<name>_db" variant (positive dB of loss).
ChannelParams channel_params_from_json(const json& doc);
json channel_params_to_json(const ChannelParams& params);

/// Expects the channel parameters under a "channel" key; the chopper,
/// background, jitter, TDC, duration and seed fields are optional and
/// default to the bundled pass configuration.
SimConfig sim_config_from_json(const json& doc);
json sim_config_to_json(const SimConfig& config);

json range_model_to_json(const RangeModel& model);
RangeModel range_model_from_json(const json& doc);

/// FNV-1a 64-bit content digest, rendered as "fnv1a64:<16 hex digits>".
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::string file_digest(const std::filesystem::path& path);

struct ManifestInput {
  std::string path;
  std::string digest;
};

/// Provenance block embedded in every output document: command, resolved
/// configuration, input digests, seed, tool version, output list.
json make_manifest(const std::string& command, const json& resolved_config,
                   std::span<const ManifestInput> inputs,
                   std::optional<std::uint64_t> seed,
                   std::span<const std::string> outputs);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace satlink
