// Little-endian byte readers/writers shared by the EDNB and EDNW container
// code. Explicit byte composition keeps the formats host-order independent.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "freqdenoise/errors.hpp"

namespace freqdenoise::detail {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

inline void put_f32le(std::vector<std::uint8_t>& out, float f) {
  put_u32le(out, std::bit_cast<std::uint32_t>(f));
}

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size)
      : data_(data), size_(size) {}

  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

  void read_bytes(void* dst, std::size_t n, const char* what) {
    if (remaining() < n) {
      throw FormatError(FormatError::Kind::Truncated,
                        std::string("file truncated while reading ") + what);
    }
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }

  std::uint32_t read_u32le(const char* what) {
    std::uint8_t b[4];
    read_bytes(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint8_t read_u8(const char* what) {
    std::uint8_t b;
    read_bytes(&b, 1, what);
    return b;
  }

  float read_f32le(const char* what) {
    return std::bit_cast<float>(read_u32le(what));
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for reading: " + path);
  in.seekg(0, std::ios::end);
  std::streamoff len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
  if (len > 0) {
    in.read(reinterpret_cast<char*>(bytes.data()), len);
  }
  if (!in) throw IoError("error reading file: " + path);
  return bytes;
}

inline void write_file_bytes(const std::string& path,
                             const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing file: " + path);
}

}  // namespace freqdenoise::detail
