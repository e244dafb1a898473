#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace freqdenoise {

enum class SegmentKind : std::uint8_t { Eeg = 0, Eog = 1, Emg = 2 };

const char* to_string(SegmentKind kind);

// EDNB segment container:
//   magic "EDNB" | u32 LE version=1 | u32 LE segment_count |
//   u32 LE segment_length | u8 kind code | payload of
//   count*length 32-bit LE floats, row-major.
struct EdnbContent {
  SegmentKind kind = SegmentKind::Eeg;
  std::size_t segment_length = 0;
  std::vector<std::vector<float>> segments;
};

void write_ednb(const std::string& path, const EdnbContent& content);
EdnbContent read_ednb(const std::string& path);

// CSV: one segment per line, comma-separated decimal values, no header.
// Rows must be rectangular and finite. Also used for noise-PSD files.
std::vector<std::vector<double>> read_csv_rows(const std::string& path);

}  // namespace freqdenoise
