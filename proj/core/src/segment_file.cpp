#include "freqdenoise/segment_file.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "freqdenoise/errors.hpp"

namespace freqdenoise {

namespace {
constexpr char kMagic[4] = {'E', 'D', 'N', 'B'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

const char* to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Eeg:
      return "eeg";
    case SegmentKind::Eog:
      return "eog";
    case SegmentKind::Emg:
      return "emg";
  }
  return "?";
}

void write_ednb(const std::string& path, const EdnbContent& content) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(13 + content.segments.size() * content.segment_length * 4);
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  detail::put_u32le(bytes, kVersion);
  detail::put_u32le(bytes, static_cast<std::uint32_t>(content.segments.size()));
  detail::put_u32le(bytes, static_cast<std::uint32_t>(content.segment_length));
  bytes.push_back(static_cast<std::uint8_t>(content.kind));
  for (const auto& seg : content.segments) {
    if (seg.size() != content.segment_length) {
      throw DimensionError("EDNB segment length mismatch on write");
    }
    for (float v : seg) detail::put_f32le(bytes, v);
  }
  detail::write_file_bytes(path, bytes);
}

EdnbContent read_ednb(const std::string& path) {
  std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes.data(), bytes.size());
  char magic[4];
  r.read_bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::BadMagic,
                      "not an EDNB file: " + path);
  }
  std::uint32_t version = r.read_u32le("version");
  if (version != kVersion) {
    throw FormatError(FormatError::Kind::BadVersion,
                      "unsupported EDNB version " + std::to_string(version));
  }
  std::uint32_t count = r.read_u32le("segment_count");
  std::uint32_t length = r.read_u32le("segment_length");
  std::uint8_t kind_code = r.read_u8("kind");
  if (kind_code > 2) {
    throw FormatError(FormatError::Kind::BadHeader,
                      "unknown segment kind code " +
                          std::to_string(kind_code));
  }
  if (length == 0) {
    throw FormatError(FormatError::Kind::BadHeader,
                      "EDNB segment_length must be positive");
  }
  const std::size_t expect = static_cast<std::size_t>(count) * length * 4;
  if (r.remaining() != expect) {
    throw FormatError(
        FormatError::Kind::Truncated,
        "EDNB payload size " + std::to_string(r.remaining()) +
            " does not match header (" + std::to_string(expect) + " bytes)");
  }
  EdnbContent out;
  out.kind = static_cast<SegmentKind>(kind_code);
  out.segment_length = length;
  out.segments.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& seg = out.segments[i];
    seg.resize(length);
    for (std::uint32_t j = 0; j < length; ++j) {
      seg[j] = r.read_f32le("payload");
      if (!std::isfinite(seg[j])) {
        throw FormatError(FormatError::Kind::NonFinite,
                          "non-finite sample in segment " + std::to_string(i));
      }
    }
  }
  return out;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file for reading: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) {
        throw FormatError(FormatError::Kind::BadHeader,
                          "unparsable value at line " + std::to_string(lineno));
      }
      if (!std::isfinite(v)) {
        throw FormatError(FormatError::Kind::NonFinite,
                          "non-finite value at line " + std::to_string(lineno));
      }
      row.push_back(v);
      p = next;
      while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
      if (p == end) break;
      if (*p != ',') {
        throw FormatError(FormatError::Kind::BadHeader,
                          "expected ',' at line " + std::to_string(lineno));
      }
      ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(FormatError::Kind::RaggedRow,
                        "row " + std::to_string(lineno) + " has " +
                            std::to_string(row.size()) + " values, expected " +
                            std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace freqdenoise
