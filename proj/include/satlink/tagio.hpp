// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "satlink/photonsim.hpp"

namespace satlink {

/// QTT1 time-tag container: 8-byte magic "QTT1\0\0\0\0", a 32-bit
/// little-endian length followed by that many bytes of JSON header
/// (config echo, epoch, RNG id, run manifest), then 9-byte records of
/// 1-byte channel + 8-byte little-endian unsigned picosecond timestamp.

inline constexpr std::size_t kQtt1MagicSize = 8;
inline constexpr char kQtt1Magic[kQtt1MagicSize] = {'Q', 'T', 'T', '1',
                                                    0, 0, 0, 0};

struct TagStream {
  nlohmann::ordered_json header;
  std::vector<TimeTag> tags;
};

void write_qtt1(std::ostream& out, const nlohmann::ordered_json& header,
                std::span<const TimeTag> tags);

/// Throws FormatError on bad magic, malformed header, or a truncated
/// record tail.
TagStream read_qtt1(std::istream& in);

/// CSV twin: header "channel,timestamp_ps", one record per line.
void write_tag_csv(std::ostream& out, std::span<const TimeTag> tags);
std::vector<TimeTag> read_tag_csv(std::istream& in);

}  // namespace satlink
