#pragma once

// Little-endian byte encoding with a trailing CRC-32 (zlib polynomial).

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "incsfa/error.hpp"

namespace incsfa {

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

class ByteWriter {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  template <typename Range>
  void f64s(const Range& values) {
    for (double v : values) f64(v);
  }

  /// Appends the CRC-32 of everything written so far and hands over the buffer.
  std::vector<std::uint8_t> finish() {
    u32(crc32_of(bytes_));
    return std::move(bytes_);
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  /// Verifies the trailing checksum; the reader then covers the payload only.
  explicit ByteReader(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw FormatError("model: truncated (no checksum)");
    payload_ = bytes.first(bytes.size() - 4);
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[payload_.size() + i]) << (8 * i);
    if (stored != crc32_of(payload_)) throw FormatError("model: checksum mismatch");
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(payload_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string str() { return raw(u32()); }
  template <typename Vec>
  void f64s(Vec&& out) {
    for (auto& v : out) v = f64();
  }
  bool at_end() const { return pos_ == payload_.size(); }

 private:
  void need(std::size_t n) const {
    if (payload_.size() - pos_ < n) throw FormatError("model: truncated payload");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(payload_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> payload_;
  std::size_t pos_ = 0;
};

}  // namespace incsfa
