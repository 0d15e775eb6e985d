#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leco/bits.hpp"
#include "leco/codec.hpp"
#include "leco/error.hpp"
#include "leco/model.hpp"
#include "leco/partitioner.hpp"
#include "leco/regressor.hpp"

namespace leco {

/// How a string shorter than the partition's padded length fills its tail.
enum class Padding : uint8_t { min, max };

/// Per-partition mapping: strings lose their shared prefix and the remaining
/// bytes become base-2^m digits, most significant first.
struct StringPartitionHeader {
  std::string prefix;
  std::vector<uint8_t> charset;  // ascending distinct bytes
  unsigned digit_bits = 1;       // m
  unsigned padded_length = 0;    // max suffix length

  uint64_t radix() const noexcept { return uint64_t{1} << digit_bits; }
  unsigned length_bits() const noexcept { return unsigned_bits(padded_length); }

  int rank(uint8_t c) const noexcept {
    const auto it = std::lower_bound(charset.begin(), charset.end(), c);
    return it != charset.end() && *it == c ? static_cast<int>(it - charset.begin()) : -1;
  }

  void validate() const {
    if (digit_bits < 1 || digit_bits > 8) fail(errc::invalid_argument, "digit width must be in [1, 8]");
    if (charset.size() > radix()) fail(errc::invalid_argument, "charset exceeds radix");
    if (!std::is_sorted(charset.begin(), charset.end()) || std::adjacent_find(charset.begin(), charset.end()) != charset.end())
      fail(errc::invalid_argument, "charset must be strictly ascending");
    if (static_cast<uint64_t>(padded_length) * digit_bits > 63)
      fail(errc::mapping_overflow, "padded suffix needs more than 63 bits");
  }
};

/// Header for a group of strings: longest common prefix, distinct suffix
/// bytes, m = ceil(log2 |charset|) (at least 1).
inline StringPartitionHeader build_string_header(std::span<const std::string> strings) {
  if (strings.empty()) fail(errc::invalid_argument, "no strings");
  StringPartitionHeader h;
  size_t common = strings[0].size();
  for (const auto& s : strings) {
    size_t k = 0;
    while (k < common && k < s.size() && s[k] == strings[0][k]) ++k;
    common = k;
  }
  h.prefix = strings[0].substr(0, common);
  std::array<bool, 256> seen{};
  size_t longest = 0;
  for (const auto& s : strings) {
    longest = std::max(longest, s.size() - common);
    for (size_t k = common; k < s.size(); ++k) seen[static_cast<uint8_t>(s[k])] = true;
  }
  for (int c = 0; c < 256; ++c)
    if (seen[c]) h.charset.push_back(static_cast<uint8_t>(c));
  h.digit_bits = std::max(1u, static_cast<unsigned>(std::bit_width(h.charset.size() > 1 ? h.charset.size() - 1 : 1)));
  if (longest * h.digit_bits > 63) fail(errc::mapping_overflow, "suffixes too long for a 64-bit carrier");
  h.padded_length = static_cast<unsigned>(longest);
  return h;
}

/// Base-2^m value of the suffix of `s`, tail filled with the smallest or largest digit.
inline uint64_t map_string_to_int(std::string_view s, const StringPartitionHeader& h, Padding pad = Padding::min) {
  if (s.substr(0, h.prefix.size()) != h.prefix) fail(errc::unmappable_character, "string lacks the partition prefix");
  const std::string_view suffix = s.substr(h.prefix.size());
  if (suffix.size() > h.padded_length) fail(errc::mapping_overflow, "string longer than the padded length");
  const uint64_t fill = pad == Padding::min ? 0 : h.radix() - 1;
  uint64_t v = 0;
  for (size_t t = 0; t < h.padded_length; ++t) {
    uint64_t digit = fill;
    if (t < suffix.size()) {
      const int r = h.rank(static_cast<uint8_t>(suffix[t]));
      if (r < 0) fail(errc::unmappable_character, "byte " + std::to_string(static_cast<uint8_t>(suffix[t])) + " not in charset");
      digit = static_cast<uint64_t>(r);
    }
    v = (v << h.digit_bits) | digit;
  }
  return v;
}

/// Inverse of the mapping for a string of `length` suffix bytes.
inline std::string unmap_string(uint64_t value, unsigned length, const StringPartitionHeader& h) {
  if (length > h.padded_length) fail(errc::format_error, "stored length exceeds padded length");
  std::string out = h.prefix;
  out.reserve(h.prefix.size() + length);
  const uint64_t mask = h.radix() - 1;
  for (unsigned t = 0; t < length; ++t) {
    const unsigned shift = h.digit_bits * (h.padded_length - 1 - t);
    const uint64_t digit = (value >> shift) & mask;
    if (digit >= h.charset.size()) fail(errc::format_error, "digit outside charset");
    out.push_back(static_cast<char>(h.charset[digit]));
  }
  return out;
}

/// Padded carrier closest to the prediction: min padding below, max padding
/// above, the prediction itself in between (any tail digits are valid).
inline uint64_t adaptive_padding(std::string_view s, const StringPartitionHeader& h, int64_t prediction) {
  const uint64_t lo = map_string_to_int(s, h, Padding::min);
  const uint64_t hi = map_string_to_int(s, h, Padding::max);
  if (prediction < 0 || static_cast<uint64_t>(prediction) < lo) return lo;
  if (static_cast<uint64_t>(prediction) > hi) return hi;
  return static_cast<uint64_t>(prediction);
}

struct StringEncodeOptions {
  FamilySpec family = Regressor::linear;
  uint64_t partition_size = 128;  // strings per partition; 0 keeps one partition
};

/// One encoded string partition.
struct StringPartition {
  uint64_t begin = 0;
  uint64_t count = 0;
  StringPartitionHeader header;
  std::vector<uint8_t> lengths;  // packed suffix lengths
  CompressedColumn values;
};

namespace detail {

inline RegressionModel midpoint_model(std::span<const std::string> strings, const StringPartitionHeader& h, const FamilySpec& family) {
  std::vector<int64_t> mid(strings.size());
  for (size_t i = 0; i < strings.size(); ++i) {
    const uint64_t lo = map_string_to_int(strings[i], h, Padding::min);
    const uint64_t hi = map_string_to_int(strings[i], h, Padding::max);
    mid[i] = static_cast<int64_t>(lo + (hi - lo) / 2);
  }
  return fit_partition_model(mid, family);
}

}  // namespace detail

/// Carriers of one partition under a model: adaptive padding against floor(F(i)).
inline std::vector<int64_t> padded_carriers(std::span<const std::string> strings, const StringPartitionHeader& h,
                                            const RegressionModel& model) {
  std::vector<int64_t> out(strings.size());
  for (size_t i = 0; i < strings.size(); ++i) {
    int64_t pred = 0;
    bool ok = true;
    try {
      pred = predict_floor(model, i);
    } catch (const error&) {
      ok = false;
    }
    out[i] = static_cast<int64_t>(ok ? adaptive_padding(strings[i], h, pred) : map_string_to_int(strings[i], h, Padding::min));
  }
  return out;
}

inline StringPartition encode_string_partition(std::span<const std::string> strings, const FamilySpec& family, uint64_t begin = 0) {
  StringPartition p;
  p.begin = begin;
  p.count = strings.size();
  p.header = build_string_header(strings);
  const RegressionModel model = detail::midpoint_model(strings, p.header, family);
  const std::vector<int64_t> carriers = padded_carriers(strings, p.header, model);
  std::vector<uint64_t> lens(strings.size());
  for (size_t i = 0; i < strings.size(); ++i) lens[i] = strings[i].size() - p.header.prefix.size();
  p.lengths = pack_bits(lens, p.header.length_bits());
  const IntSequence seq(carriers, 64);
  const RegressionModel models[] = {model};
  p.values = encode_column(seq, partition_fixed(seq.size(), seq.size()), models);
  return p;
}

/// Immutable compressed string column ("LSTR" container).
///
///   "LSTR" | version u8 | reserved u8 x 3 | n u64 | partitions u64
///   per partition:
///     count u32 | prefix_len u16 | prefix | charset_size u16 | charset
///     digit_bits u8 | padded_length u8 | lengths (packed) | carrier_bytes u32 | LECO container
class StringColumn {
 public:
  static constexpr std::array<uint8_t, 4> kMagic = {'L', 'S', 'T', 'R'};
  static constexpr uint8_t kVersion = 1;

  static StringColumn encode(std::span<const std::string> strings, const StringEncodeOptions& opt = {}) {
    if (strings.empty()) fail(errc::invalid_argument, "no strings");
    const uint64_t step = opt.partition_size == 0 ? strings.size() : opt.partition_size;
    StringColumn c;
    for (uint64_t b = 0; b < strings.size(); b += step) {
      const uint64_t len = std::min<uint64_t>(step, strings.size() - b);
      c.parts_.push_back(encode_string_partition(strings.subspan(b, len), opt.family, b));
    }
    c.n_ = strings.size();
    c.serialize();
    return c;
  }

  static StringColumn from_bytes(std::vector<uint8_t> bytes) {
    StringColumn c;
    c.bytes_ = std::move(bytes);
    c.parse();
    return c;
  }

  uint64_t size() const noexcept { return n_; }
  const std::vector<uint8_t>& bytes() const noexcept { return bytes_; }
  size_t partition_count() const noexcept { return parts_.size(); }
  const StringPartition& partition(size_t j) const { return parts_.at(j); }

  std::string at(uint64_t i) const {
    if (i >= n_) fail(errc::out_of_range, "string index out of range");
    const auto it = std::upper_bound(parts_.begin(), parts_.end(), i, [](uint64_t x, const StringPartition& p) { return x < p.begin; });
    const StringPartition& p = *(it - 1);
    const uint64_t k = i - p.begin;
    const unsigned len = static_cast<unsigned>(read_bits(p.lengths, k * p.header.length_bits(), p.header.length_bits()));
    return unmap_string(static_cast<uint64_t>(p.values.at(k)), len, p.header);
  }

  std::vector<std::string> decode_all() const {
    std::vector<std::string> out;
    out.reserve(n_);
    for (const auto& p : parts_) {
      const auto carriers = leco::decode_all(p.values);
      for (uint64_t k = 0; k < p.count; ++k) {
        const unsigned len = static_cast<unsigned>(read_bits(p.lengths, k * p.header.length_bits(), p.header.length_bits()));
        out.push_back(unmap_string(static_cast<uint64_t>(carriers[k]), len, p.header));
      }
    }
    return out;
  }

 private:
  void serialize() {
    bytes_.clear();
    ByteWriter w(bytes_);
    w.bytes(kMagic);
    w.u8(kVersion);
    w.u8(0);
    w.u8(0);
    w.u8(0);
    w.u64(n_);
    w.u64(parts_.size());
    for (const auto& p : parts_) {
      w.u32(static_cast<uint32_t>(p.count));
      w.u16(static_cast<uint16_t>(p.header.prefix.size()));
      w.str(p.header.prefix);
      w.u16(static_cast<uint16_t>(p.header.charset.size()));
      w.bytes(p.header.charset);
      w.u8(static_cast<uint8_t>(p.header.digit_bits));
      w.u8(static_cast<uint8_t>(p.header.padded_length));
      w.bytes(p.lengths);
      w.u32(static_cast<uint32_t>(p.values.bytes().size()));
      w.bytes(p.values.bytes());
    }
  }

  void parse() {
    ByteReader r(bytes_);
    const auto magic = r.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) fail(errc::format_error, "bad string container magic");
    if (r.u8() != kVersion) fail(errc::format_error, "unsupported string container version");
    r.take(3);
    n_ = r.u64();
    const uint64_t m = r.u64();
    if (n_ == 0 || m == 0 || m > n_) fail(errc::format_error, "bad string container counts");
    uint64_t begin = 0;
    for (uint64_t j = 0; j < m; ++j) {
      StringPartition p;
      p.begin = begin;
      p.count = r.u32();
      if (p.count == 0) fail(errc::format_error, "empty string partition");
      p.header.prefix = r.str(r.u16());
      const auto cs = r.take(r.u16());
      p.header.charset.assign(cs.begin(), cs.end());
      p.header.digit_bits = r.u8();
      p.header.padded_length = r.u8();
      try {
        p.header.validate();
      } catch (const error& e) {
        fail(errc::format_error, std::string("bad string header: ") + e.what());
      }
      const auto lens = r.take(packed_bytes(p.count, p.header.length_bits()));
      p.lengths.assign(lens.begin(), lens.end());
      for (uint64_t k = 0; k < p.count; ++k)
        if (read_bits(p.lengths, k * p.header.length_bits(), p.header.length_bits()) > p.header.padded_length)
          fail(errc::format_error, "stored length exceeds padded length");
      const auto carrier = r.take(r.u32());
      p.values = CompressedColumn::from_bytes(std::vector<uint8_t>(carrier.begin(), carrier.end()));
      if (p.values.size() != p.count) fail(errc::format_error, "carrier count mismatch");
      begin += p.count;
      parts_.push_back(std::move(p));
    }
    if (begin != n_) fail(errc::format_error, "partition counts do not sum to n");
    if (r.remaining() != 0) fail(errc::format_error, "trailing bytes in string container");
  }

  std::vector<uint8_t> bytes_;
  std::vector<StringPartition> parts_;
  uint64_t n_ = 0;
};

inline std::string decode_string_at(const StringColumn& col, uint64_t i) { return col.at(i); }

}  // namespace leco
