// SPDX-License-Identifier: Apache-2.0

#include "satlink/tagio.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace satlink {

namespace {

constexpr std::size_t kRecordSize = 9;
constexpr std::uint32_t kMaxHeaderBytes = 16u << 20;

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes = {
      static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32_le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_qtt1(std::ostream& out, const nlohmann::ordered_json& header,
                std::span<const TimeTag> tags) {
  out.write(kQtt1Magic, kQtt1MagicSize);
  const std::string text = header.dump();
  put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  std::array<char, kRecordSize> rec;
  for (const auto& tag : tags) {
    rec[0] = static_cast<char>(tag.channel);
    std::uint64_t v = tag.timestamp_ps;
    for (int i = 0; i < 8; ++i) {
      rec[1 + i] = static_cast<char>(v & 0xFF);
      v >>= 8;
    }
    out.write(rec.data(), rec.size());
  }
  if (!out) throw FormatError("failed writing QTT1 stream");
}

TagStream read_qtt1(std::istream& in) {
  std::array<char, kQtt1MagicSize> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != static_cast<std::streamsize>(magic.size()) ||
      std::memcmp(magic.data(), kQtt1Magic, kQtt1MagicSize) != 0) {
    throw FormatError("not a QTT1 file (bad magic)");
  }

  std::array<unsigned char, 4> len_bytes{};
  in.read(reinterpret_cast<char*>(len_bytes.data()), len_bytes.size());
  if (in.gcount() != 4) throw FormatError("QTT1 header length truncated");
  const std::uint32_t header_len = get_u32_le(len_bytes.data());
  if (header_len > kMaxHeaderBytes) {
    throw FormatError("QTT1 header length " + std::to_string(header_len) +
                      " exceeds the 16 MiB limit");
  }

  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (in.gcount() != static_cast<std::streamsize>(header_len)) {
    throw FormatError("QTT1 header truncated");
  }

  TagStream stream;
  stream.header = nlohmann::ordered_json::parse(text, nullptr, false);
  if (stream.header.is_discarded()) {
    throw FormatError("QTT1 header is not valid JSON");
  }

  std::array<unsigned char, kRecordSize> rec{};
  while (true) {
    in.read(reinterpret_cast<char*>(rec.data()), rec.size());
    const auto got = in.gcount();
    if (got == 0) break;
    if (got != static_cast<std::streamsize>(rec.size())) {
      throw FormatError("QTT1 record tail truncated (" + std::to_string(got) +
                        " of 9 bytes)");
    }
    std::uint64_t ts = 0;
    for (int i = 7; i >= 0; --i) ts = (ts << 8) | rec[1 + i];
    stream.tags.push_back({static_cast<Channel>(rec[0]), ts});
  }
  return stream;
}

void write_tag_csv(std::ostream& out, std::span<const TimeTag> tags) {
  out << "channel,timestamp_ps\n";
  for (const auto& tag : tags) {
    out << static_cast<unsigned>(tag.channel) << ',' << tag.timestamp_ps << '\n';
  }
}

std::vector<TimeTag> read_tag_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("tag CSV is empty; expected header channel,timestamp_ps");
  }
  std::string header = line;
  std::erase_if(header, [](char c) { return c == ' ' || c == '\r'; });
  if (header != "channel,timestamp_ps") {
    throw FormatError("tag CSV header must be 'channel,timestamp_ps'");
  }
  std::vector<TimeTag> tags;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    unsigned channel = 0;
    std::uint64_t ts = 0;
    char comma = 0;
    if (!(row >> channel >> comma >> ts) || comma != ',' || channel > 255) {
      throw FormatError("tag CSV line " + std::to_string(line_no) +
                        " is not 'channel,timestamp_ps'");
    }
    tags.push_back({static_cast<Channel>(channel), ts});
  }
  return tags;
}

}  // namespace satlink
