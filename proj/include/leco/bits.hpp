#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "leco/error.hpp"

namespace leco {

using int128 = __int128;

// ---------------------------------------------------------------------------
// Residual widths
// ---------------------------------------------------------------------------

/// Bits needed so that `delta` fits the offset-binary range [-2^(phi-1), 2^(phi-1)).
/// Zero needs no bits at all.
constexpr unsigned required_bits(int64_t delta) noexcept {
  if (delta == 0) return 0;
  const uint64_t magnitude = delta >= 0 ? static_cast<uint64_t>(delta) : ~static_cast<uint64_t>(delta);
  return static_cast<unsigned>(std::bit_width(magnitude)) + 1;
}

constexpr unsigned required_bits(std::span<const int64_t> deltas) noexcept {
  unsigned phi = 0;
  for (int64_t d : deltas) phi = std::max(phi, required_bits(d));
  return phi;
}

/// Same as `required_bits` for a value known to be in [lo, hi]; only the ends matter.
constexpr unsigned required_bits_for_range(int64_t lo, int64_t hi) noexcept {
  return std::max(required_bits(lo), required_bits(hi));
}

/// Unsigned width used by FOR-style offsets: bits to hold any value in [0, span].
constexpr unsigned unsigned_bits(uint64_t span) noexcept { return static_cast<unsigned>(std::bit_width(span)); }

constexpr uint64_t zigzag_encode(int64_t v) noexcept {
  return (static_cast<uint64_t>(v) << 1) ^ static_cast<uint64_t>(v >> 63);
}

constexpr int64_t zigzag_decode(uint64_t u) noexcept {
  return static_cast<int64_t>((u >> 1) ^ (~(u & 1) + 1));
}

constexpr uint64_t low_mask(unsigned width) noexcept {
  return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}

/// Offset-binary: store delta + 2^(phi-1) in phi unsigned bits.
constexpr uint64_t to_offset_binary(int64_t delta, unsigned phi) noexcept {
  if (phi == 0) return 0;
  return (static_cast<uint64_t>(delta) + (uint64_t{1} << (phi - 1))) & low_mask(phi);
}

constexpr int64_t from_offset_binary(uint64_t stored, unsigned phi) noexcept {
  if (phi == 0) return 0;
  return static_cast<int64_t>(stored - (uint64_t{1} << (phi - 1)));
}

/// Wrapping add/sub; residual arithmetic is exact modulo 2^64.
constexpr int64_t wrapping_add(int64_t a, int64_t b) noexcept {
  return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
constexpr int64_t wrapping_sub(int64_t a, int64_t b) noexcept {
  return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}

// ---------------------------------------------------------------------------
// Bit packing: LSB-first within a byte, little-endian across bytes.
// ---------------------------------------------------------------------------

constexpr uint64_t packed_bytes(uint64_t count, unsigned width) noexcept { return (count * width + 7) / 8; }

class BitWriter {
 public:
  explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}

  void put(uint64_t value, unsigned width) {
    if (width == 0) return;
    value &= low_mask(width);
    while (width > 0) {
      const unsigned room = 64 - fill_;
      const unsigned take = width < room ? width : room;
      acc_ |= (value & low_mask(take)) << fill_;
      fill_ += take;
      width -= take;
      value = take >= 64 ? 0 : value >> take;
      if (fill_ == 64) drain_full();
    }
  }

  /// Emits the partially filled byte, if any.
  void flush() {
    while (fill_ >= 8) {
      out_.push_back(static_cast<uint8_t>(acc_));
      acc_ >>= 8;
      fill_ -= 8;
    }
    if (fill_ > 0) {
      out_.push_back(static_cast<uint8_t>(acc_));
      acc_ = 0;
      fill_ = 0;
    }
  }

 private:
  void drain_full() {
    for (int b = 0; b < 8; ++b) out_.push_back(static_cast<uint8_t>(acc_ >> (8 * b)));
    acc_ = 0;
    fill_ = 0;
  }

  std::vector<uint8_t>& out_;
  uint64_t acc_ = 0;
  unsigned fill_ = 0;
};

inline uint64_t load_le64(const uint8_t* p) noexcept {
  uint64_t v;
  std::memcpy(&v, p, 8);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

/// Reads `width` bits starting at absolute bit `bit_pos`. The caller guarantees
/// the field lies inside `bytes`.
inline uint64_t read_bits(std::span<const uint8_t> bytes, uint64_t bit_pos, unsigned width) noexcept {
  if (width == 0) return 0;
  const uint64_t byte = bit_pos >> 3;
  const unsigned shift = static_cast<unsigned>(bit_pos & 7);
  uint64_t word;
  if (byte + 8 <= bytes.size()) {
    word = load_le64(bytes.data() + byte);
  } else {
    uint8_t tmp[8] = {};
    std::memcpy(tmp, bytes.data() + byte, bytes.size() - byte);
    word = load_le64(tmp);
  }
  uint64_t v = word >> shift;
  if (shift + width > 64) {
    const uint8_t extra = bytes[byte + 8];
    v |= static_cast<uint64_t>(extra) << (64 - shift);
  }
  return v & low_mask(width);
}

inline std::vector<uint8_t> pack_bits(std::span<const uint64_t> values, unsigned width) {
  if (width > 64) fail(errc::invalid_argument, "bit width above 64");
  std::vector<uint8_t> out;
  out.reserve(packed_bytes(values.size(), width));
  BitWriter w(out);
  for (uint64_t v : values) {
    if (width < 64 && (v >> width) != 0) fail(errc::invalid_argument, "value does not fit in " + std::to_string(width) + " bits");
    w.put(v, width);
  }
  w.flush();
  return out;
}

inline std::vector<uint64_t> unpack_bits(std::span<const uint8_t> bytes, unsigned width, uint64_t count) {
  if (width > 64) fail(errc::invalid_argument, "bit width above 64");
  if (packed_bytes(count, width) > bytes.size()) fail(errc::format_error, "packed payload truncated");
  std::vector<uint64_t> out(count);
  for (uint64_t i = 0; i < count; ++i) out[i] = read_bits(bytes, i * width, width);
  return out;
}

// ---------------------------------------------------------------------------
// Little-endian byte serialization.
// ---------------------------------------------------------------------------

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<uint8_t>& out) : out_(out) {}

  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) { put_le(v, 2); }
  void u32(uint32_t v) { put_le(v, 4); }
  void u64(uint64_t v) { put_le(v, 8); }
  void i64(int64_t v) { put_le(static_cast<uint64_t>(v), 8); }
  void f64(double v) { put_le(std::bit_cast<uint64_t>(v), 8); }
  void bytes(std::span<const uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void str(std::string_view s) {
    out_.insert(out_.end(), reinterpret_cast<const uint8_t*>(s.data()),
                reinterpret_cast<const uint8_t*>(s.data()) + s.size());
  }

  /// Overwrites a previously reserved u32 slot.
  void patch_u32(size_t at, uint32_t v) {
    for (int b = 0; b < 4; ++b) out_[at + b] = static_cast<uint8_t>(v >> (8 * b));
  }
  size_t size() const { return out_.size(); }

 private:
  void put_le(uint64_t v, int n) {
    for (int b = 0; b < n; ++b) out_.push_back(static_cast<uint8_t>(v >> (8 * b)));
  }
  std::vector<uint8_t>& out_;
};

/// Bounds-checked reader; any overrun raises a format error.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> bytes, size_t pos = 0) : bytes_(bytes), pos_(pos) {}

  uint8_t u8() { return static_cast<uint8_t>(get_le(1)); }
  uint16_t u16() { return static_cast<uint16_t>(get_le(2)); }
  uint32_t u32() { return static_cast<uint32_t>(get_le(4)); }
  uint64_t u64() { return get_le(8); }
  int64_t i64() { return static_cast<int64_t>(get_le(8)); }
  double f64() { return std::bit_cast<double>(get_le(8)); }

  std::span<const uint8_t> take(uint64_t count) {
    need(count);
    auto s = bytes_.subspan(pos_, count);
    pos_ += count;
    return s;
  }
  std::string str(uint64_t count) {
    auto s = take(count);
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  void seek(size_t pos) {
    if (pos > bytes_.size()) fail(errc::format_error, "seek past end");
    pos_ = pos;
  }

 private:
  void need(uint64_t count) const {
    if (count > bytes_.size() - pos_) fail(errc::format_error, "container truncated");
  }
  uint64_t get_le(int n) {
    need(static_cast<uint64_t>(n));
    uint64_t v = 0;
    for (int b = 0; b < n; ++b) v |= static_cast<uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += static_cast<size_t>(n);
    return v;
  }

  std::span<const uint8_t> bytes_;
  size_t pos_;
};

}  // namespace leco
