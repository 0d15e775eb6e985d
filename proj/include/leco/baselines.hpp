#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leco/bits.hpp"
#include "leco/codec.hpp"
#include "leco/error.hpp"
#include "leco/model.hpp"
#include "leco/partitioner.hpp"

namespace leco {

// ---------------------------------------------------------------------------
// Frame of reference
// ---------------------------------------------------------------------------

/// "LFOR" | version u8 | elem_width u8 | reserved u16 | n u64 | L u64
/// frame table: (base i64, width u8, payload offset u32) x ceil(n / L)
/// payloads: (v - base) packed at width bits, LSB-first
class ForColumn {
 public:
  static constexpr std::array<uint8_t, 4> kMagic = {'L', 'F', 'O', 'R'};
  static constexpr uint8_t kVersion = 1;
  static constexpr uint64_t kHeaderBytes = 24;
  static constexpr uint64_t kFrameBytes = 13;

  struct Frame {
    int64_t base;
    unsigned width;
    uint64_t payload_offset;  // absolute
  };

  static ForColumn encode(const IntSequence& seq, uint64_t frame_length) {
    if (frame_length < 1) fail(errc::invalid_argument, "frame length must be at least 1");
    if (seq.size() >= format::kMaxValues) fail(errc::invalid_argument, "columns are limited to fewer than 2^32 values");
    const auto v = seq.values();
    const uint64_t n = v.size(), m = (n + frame_length - 1) / frame_length;
    std::vector<uint8_t> out;
    ByteWriter w(out);
    w.bytes(kMagic);
    w.u8(kVersion);
    w.u8(static_cast<uint8_t>(seq.elem_width()));
    w.u16(0);
    w.u64(n);
    w.u64(frame_length);
    const size_t table = out.size();
    out.resize(table + kFrameBytes * m);
    for (uint64_t j = 0; j < m; ++j) {
      const auto frame = v.subspan(j * frame_length, std::min(frame_length, n - j * frame_length));
      const auto [lo, hi] = std::minmax_element(frame.begin(), frame.end());
      const unsigned width = unsigned_bits(static_cast<uint64_t>(*hi) - static_cast<uint64_t>(*lo));
      const uint64_t rel = out.size() - table - kFrameBytes * m;
      if (rel > 0xFFFFFFFFull) fail(errc::invalid_argument, "container exceeds 4 GiB");
      std::vector<uint8_t> entry;
      ByteWriter e(entry);
      e.i64(*lo);
      e.u8(static_cast<uint8_t>(width));
      e.u32(static_cast<uint32_t>(rel));
      std::copy(entry.begin(), entry.end(), out.begin() + static_cast<std::ptrdiff_t>(table + kFrameBytes * j));
      BitWriter bw(out);
      for (int64_t x : frame) bw.put(static_cast<uint64_t>(x) - static_cast<uint64_t>(*lo), width);
      bw.flush();
    }
    return from_bytes(std::move(out));
  }

  static ForColumn from_bytes(std::vector<uint8_t> bytes) {
    ForColumn c;
    c.bytes_ = std::move(bytes);
    ByteReader r(c.bytes_);
    const auto magic = r.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) fail(errc::format_error, "bad FOR magic");
    if (r.u8() != kVersion) fail(errc::format_error, "unsupported FOR version");
    c.elem_width_ = r.u8();
    if (c.elem_width_ != 32 && c.elem_width_ != 64) fail(errc::format_error, "bad element width");
    r.u16();
    c.n_ = r.u64();
    c.frame_length_ = r.u64();
    if (c.n_ == 0 || c.n_ >= format::kMaxValues || c.frame_length_ == 0) fail(errc::format_error, "bad FOR counts");
    const uint64_t m = (c.n_ + c.frame_length_ - 1) / c.frame_length_;
    if (r.remaining() / kFrameBytes < m) fail(errc::format_error, "FOR frame table truncated");
    const uint64_t payloads = kHeaderBytes + kFrameBytes * m;
    uint64_t expect = 0;
    for (uint64_t j = 0; j < m; ++j) {
      Frame f;
      f.base = r.i64();
      f.width = r.u8();
      if (f.width > 64) fail(errc::format_error, "FOR width above 64");
      const uint64_t rel = r.u32();
      if (rel != expect) fail(errc::format_error, "FOR payload offsets not contiguous");
      f.payload_offset = payloads + rel;
      const uint64_t len = std::min(c.frame_length_, c.n_ - j * c.frame_length_);
      expect += packed_bytes(len, f.width);
      c.frames_.push_back(f);
    }
    if (payloads + expect != c.bytes_.size()) fail(errc::format_error, "FOR payload size mismatch");
    return c;
  }

  uint64_t size() const noexcept { return n_; }
  uint64_t frame_length() const noexcept { return frame_length_; }
  unsigned elem_width() const noexcept { return elem_width_; }
  const std::vector<uint8_t>& bytes() const noexcept { return bytes_; }
  const Frame& frame(size_t j) const { return frames_.at(j); }
  size_t frame_count() const noexcept { return frames_.size(); }

  int64_t at(uint64_t i) const {
    if (i >= n_) fail(errc::out_of_range, "position outside the column");
    const Frame& f = frames_[i / frame_length_];
    const uint64_t k = i % frame_length_;
    return wrapping_add(f.base, static_cast<int64_t>(read_bits(bytes_, f.payload_offset * 8 + k * f.width, f.width)));
  }

  std::vector<int64_t> decode_all() const {
    std::vector<int64_t> out(n_);
    for (size_t j = 0; j < frames_.size(); ++j) {
      const Frame& f = frames_[j];
      const uint64_t b = j * frame_length_, len = std::min(frame_length_, n_ - b);
      for (uint64_t k = 0; k < len; ++k)
        out[b + k] = wrapping_add(f.base, static_cast<int64_t>(read_bits(bytes_, f.payload_offset * 8 + k * f.width, f.width)));
    }
    return out;
  }

  uint64_t model_bytes() const noexcept { return kHeaderBytes + kFrameBytes * frames_.size(); }

 private:
  std::vector<uint8_t> bytes_;
  std::vector<Frame> frames_;
  uint64_t n_ = 0, frame_length_ = 1;
  unsigned elem_width_ = 64;
};

inline ForColumn for_encode(const IntSequence& seq, uint64_t frame_length) { return ForColumn::encode(seq, frame_length); }
inline int64_t for_decode_at(const ForColumn& col, uint64_t i) { return col.at(i); }

// ---------------------------------------------------------------------------
// Delta encoding: the step family inside the LECO container
// ---------------------------------------------------------------------------

inline CompressedColumn delta_encode_fixed(const IntSequence& seq, uint64_t partition_length) {
  return encode_column(seq, partition_fixed(seq.size(), partition_length), FamilySpec(Regressor::step));
}

inline CompressedColumn delta_encode_variable(const IntSequence& seq, double tau = 0.1) {
  const FamilySpec step(Regressor::step);
  return encode_column(seq, partition_variable(seq.values(), step, cost_model_for(step, Scheme::variable, tau)), step);
}

// ---------------------------------------------------------------------------
// Elias-Fano
// ---------------------------------------------------------------------------

/// "LEF1" | version u8 | reserved u8 x 3 | n u64 | v_min i64 | low_bits u8 | reserved u8 x 7 | upper_len u64
/// lower bits: ell bits per value, LSB-first | upper bits: unary bucket counts
/// Select samples are rebuilt on load and not stored.
class EliasFanoColumn {
 public:
  static constexpr std::array<uint8_t, 4> kMagic = {'L', 'E', 'F', '1'};
  static constexpr uint8_t kVersion = 1;
  static constexpr uint64_t kHeaderBytes = 40;
  static constexpr uint64_t kSampleRate = 256;

  static EliasFanoColumn encode(std::span<const int64_t> values) {
    if (values.empty()) fail(errc::invalid_argument, "empty sequence");
    if (values.size() >= format::kMaxValues) fail(errc::invalid_argument, "columns are limited to fewer than 2^32 values");
    for (size_t i = 1; i < values.size(); ++i)
      if (values[i] < values[i - 1]) fail(errc::not_sorted, "Elias-Fano needs a non-decreasing sequence");
    EliasFanoColumn c;
    c.n_ = values.size();
    c.base_ = values.front();
    const uint64_t universe = static_cast<uint64_t>(values.back()) - static_cast<uint64_t>(c.base_);
    // Smallest ell with n * 2^ell >= universe.
    unsigned ell = 0;
    while (ell < 63 && (static_cast<int128>(c.n_) << ell) < static_cast<int128>(universe)) ++ell;
    c.ell_ = ell;
    std::vector<uint8_t> lower;
    BitWriter lw(lower);
    for (int64_t v : values) lw.put(static_cast<uint64_t>(v) - static_cast<uint64_t>(c.base_), ell);
    lw.flush();
    c.upper_len_ = c.n_ + (universe >> ell) + 1;
    std::vector<uint64_t> upper((c.upper_len_ + 63) / 64, 0);
    for (uint64_t i = 0; i < c.n_; ++i) {
      const uint64_t high = (static_cast<uint64_t>(values[i]) - static_cast<uint64_t>(c.base_)) >> ell;
      const uint64_t pos = high + i;
      upper[pos / 64] |= uint64_t{1} << (pos % 64);
    }
    std::vector<uint8_t> out;
    ByteWriter w(out);
    w.bytes(kMagic);
    w.u8(kVersion);
    for (int k = 0; k < 3; ++k) w.u8(0);
    w.u64(c.n_);
    w.i64(c.base_);
    w.u8(static_cast<uint8_t>(ell));
    for (int k = 0; k < 7; ++k) w.u8(0);
    w.u64(c.upper_len_);
    w.bytes(lower);
    for (uint64_t b = 0; b < (c.upper_len_ + 7) / 8; ++b) w.u8(static_cast<uint8_t>(upper[b / 8] >> (8 * (b % 8))));
    return from_bytes(std::move(out));
  }

  static EliasFanoColumn from_bytes(std::vector<uint8_t> bytes) {
    EliasFanoColumn c;
    c.bytes_ = std::move(bytes);
    ByteReader r(c.bytes_);
    const auto magic = r.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) fail(errc::format_error, "bad Elias-Fano magic");
    if (r.u8() != kVersion) fail(errc::format_error, "unsupported Elias-Fano version");
    r.take(3);
    c.n_ = r.u64();
    c.base_ = r.i64();
    c.ell_ = r.u8();
    r.take(7);
    c.upper_len_ = r.u64();
    if (c.n_ == 0 || c.n_ >= format::kMaxValues || c.ell_ > 63) fail(errc::format_error, "bad Elias-Fano header");
    if (c.upper_len_ <= c.n_ || c.upper_len_ / 8 > c.bytes_.size()) fail(errc::format_error, "bad upper length");
    c.lower_offset_ = r.pos();
    const uint64_t lower_bytes = packed_bytes(c.n_, c.ell_);
    r.take(lower_bytes);
    const auto up = r.take((c.upper_len_ + 7) / 8);
    if (r.remaining() != 0) fail(errc::format_error, "trailing bytes in Elias-Fano container");
    c.upper_.assign((c.upper_len_ + 63) / 64, 0);
    for (size_t b = 0; b < up.size(); ++b) c.upper_[b / 8] |= static_cast<uint64_t>(up[b]) << (8 * (b % 8));
    uint64_t ones = 0;
    for (uint64_t wi = 0; wi < c.upper_.size(); ++wi) {
      uint64_t word = c.upper_[wi];
      while (word) {
        if (ones % kSampleRate == 0) c.samples_.push_back(wi * 64 + static_cast<uint64_t>(std::countr_zero(word)));
        word &= word - 1;
        ++ones;
      }
    }
    if (ones != c.n_) fail(errc::format_error, "upper bits do not hold n ones");
    return c;
  }

  uint64_t size() const noexcept { return n_; }
  unsigned low_bits() const noexcept { return ell_; }
  int64_t base() const noexcept { return base_; }
  const std::vector<uint8_t>& bytes() const noexcept { return bytes_; }
  uint64_t size_bits() const noexcept { return 8 * bytes_.size(); }

  int64_t at(uint64_t i) const {
    if (i >= n_) fail(errc::out_of_range, "position outside the column");
    const uint64_t high = select1(i) - i;
    const uint64_t low = read_bits(std::span<const uint8_t>(bytes_).subspan(lower_offset_), i * ell_, ell_);
    return wrapping_add(base_, static_cast<int64_t>((high << ell_) | low));
  }

  std::vector<int64_t> decode_all() const {
    std::vector<int64_t> out(n_);
    const auto lower = std::span<const uint8_t>(bytes_).subspan(lower_offset_);
    uint64_t i = 0;
    for (uint64_t wi = 0; wi < upper_.size() && i < n_; ++wi) {
      uint64_t word = upper_[wi];
      while (word && i < n_) {
        const uint64_t pos = wi * 64 + static_cast<uint64_t>(std::countr_zero(word));
        out[i] = wrapping_add(base_, static_cast<int64_t>(((pos - i) << ell_) | read_bits(lower, i * ell_, ell_)));
        word &= word - 1;
        ++i;
      }
    }
    return out;
  }

  /// Each value's low bits, most significant first, space separated; empty when ell is 0.
  std::string lower_bits_string() const {
    std::string s;
    if (ell_ == 0) return s;
    const auto lower = std::span<const uint8_t>(bytes_).subspan(lower_offset_);
    for (uint64_t i = 0; i < n_; ++i) {
      if (i) s += ' ';
      const uint64_t low = read_bits(lower, i * ell_, ell_);
      for (unsigned b = ell_; b-- > 0;) s += ((low >> b) & 1) ? '1' : '0';
    }
    return s;
  }

  /// Upper bits grouped per bucket: one '1' per value then a terminating '0'.
  std::string upper_bits_string() const {
    std::string s;
    for (uint64_t p = 0; p < upper_len_; ++p) {
      const bool one = (upper_[p / 64] >> (p % 64)) & 1;
      s += one ? '1' : '0';
      if (!one && p + 1 < upper_len_) s += ' ';
    }
    return s;
  }

 private:
  uint64_t select1(uint64_t i) const {
    uint64_t pos = samples_[i / kSampleRate];
    uint64_t rank = (i / kSampleRate) * kSampleRate;
    uint64_t wi = pos / 64;
    uint64_t word = upper_[wi] & (~uint64_t{0} << (pos % 64));
    while (true) {
      const uint64_t c = static_cast<uint64_t>(std::popcount(word));
      if (rank + c > i) break;
      rank += c;
      word = upper_[++wi];
    }
    for (uint64_t skip = i - rank; skip > 0; --skip) word &= word - 1;
    return wi * 64 + static_cast<uint64_t>(std::countr_zero(word));
  }

  std::vector<uint8_t> bytes_;
  std::vector<uint64_t> upper_;
  std::vector<uint64_t> samples_;
  uint64_t n_ = 0, upper_len_ = 0, lower_offset_ = 0;
  int64_t base_ = 0;
  unsigned ell_ = 0;
};

inline EliasFanoColumn ef_encode(std::span<const int64_t> sorted) { return EliasFanoColumn::encode(sorted); }
inline int64_t ef_access(const EliasFanoColumn& col, uint64_t i) { return col.at(i); }

}  // namespace leco
