#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "leco/bits.hpp"
#include "leco/error.hpp"
#include "leco/format.hpp"
#include "leco/model.hpp"
#include "leco/regressor.hpp"

namespace leco {

struct Correction {
  uint32_t pos;
  int64_t prediction;
  friend bool operator==(const Correction&, const Correction&) = default;
};

struct EncodeOptions {
  /// Partitions needing more corrections than this fraction of their length
  /// are stored without accumulation support.
  double max_correction_fraction = 1.0 / 64;
  /// Constant fits reproduce frame-of-reference offsets.
  bool for_mode = false;
};

/// Parsed view of one partition block.
struct PartitionInfo {
  uint64_t begin = 0;
  uint64_t length = 0;
  RegressionModel model;
  unsigned phi = 0;
  bool accumulate = false;               // linear only
  std::vector<Correction> corrections;   // ascending by pos
  uint64_t block_offset = 0;             // absolute byte offset of the block
  uint64_t header_bytes = 0;             // block bytes before the payload
  uint64_t payload_offset = 0;           // absolute byte offset of the payload
  uint64_t payload_bytes = 0;
};

struct SizeBreakdown {
  uint64_t total_bytes = 0;
  uint64_t model_bytes = 0;       // global header, tables, block headers
  uint64_t delta_bytes = 0;       // payloads and correction lists
  uint64_t correction_count = 0;
};

/// Immutable, self-describing compressed integer column.
class CompressedColumn {
 public:
  CompressedColumn() = default;

  /// Parses and fully validates a container; any inconsistency is a format_error.
  static CompressedColumn from_bytes(std::vector<uint8_t> bytes) {
    CompressedColumn c;
    c.bytes_ = std::move(bytes);
    c.parse();
    return c;
  }

  const std::vector<uint8_t>& bytes() const noexcept { return bytes_; }
  uint64_t size() const noexcept { return n_; }
  unsigned elem_width() const noexcept { return elem_width_; }
  Scheme scheme() const noexcept { return scheme_; }
  uint64_t fixed_length() const noexcept { return fixed_length_; }
  size_t partition_count() const noexcept { return parts_.size(); }
  const PartitionInfo& partition(size_t j) const { return parts_.at(j); }

  PartitionLayout layout() const {
    PartitionLayout l;
    l.scheme = scheme_;
    l.fixed_length = fixed_length_;
    for (const auto& p : parts_) l.boundaries.push_back(p.begin);
    l.boundaries.push_back(n_);
    return l;
  }

  /// Index of the partition holding position i.
  size_t locate(uint64_t i) const {
    if (i >= n_) fail(errc::out_of_range, "position " + std::to_string(i) + " outside [0, " + std::to_string(n_) + ")");
    if (scheme_ == Scheme::fixed) return static_cast<size_t>(i / fixed_length_);
    const auto it = std::upper_bound(starts_.begin(), starts_.end(), i);
    return static_cast<size_t>(it - starts_.begin()) - 1;
  }

  int64_t at(uint64_t i) const {
    const PartitionInfo& p = parts_[locate(i)];
    return value_in(p, i - p.begin);
  }

  /// Value at offset k inside partition p, by direct model evaluation.
  int64_t value_in(const PartitionInfo& p, uint64_t k) const {
    const std::span<const uint8_t> data(bytes_);
    if (p.model.family == Family::step) {
      int64_t v = p.model.first;
      for (uint64_t t = 1; t <= k; ++t) v = wrapping_add(v, zigzag_decode(read_bits(data, p.payload_offset * 8 + t * p.phi, p.phi)));
      return v;
    }
    const int64_t delta = from_offset_binary(read_bits(data, p.payload_offset * 8 + k * p.phi, p.phi), p.phi);
    return wrapping_add(predict_floor(p.model, k), delta);
  }

  SizeBreakdown breakdown() const {
    SizeBreakdown b;
    b.total_bytes = bytes_.size();
    for (const auto& p : parts_) {
      const uint64_t corr = p.accumulate ? format::kCorrectionBytes * p.corrections.size() : 0;
      b.delta_bytes += p.payload_bytes + corr;
      b.correction_count += p.accumulate ? p.corrections.size() : 0;
    }
    b.model_bytes = b.total_bytes - b.delta_bytes;
    return b;
  }

  double compression_ratio() const {
    return static_cast<double>(bytes_.size()) / (static_cast<double>(n_) * elem_width_ / 8.0);
  }

 private:
  void parse() {
    ByteReader r(bytes_);
    const auto magic = r.take(4);
    if (!std::equal(magic.begin(), magic.end(), format::kMagic.begin())) fail(errc::format_error, "bad magic");
    if (r.u8() != format::kVersion) fail(errc::format_error, "unsupported version");
    const uint8_t scheme = r.u8();
    if (scheme > 1) fail(errc::format_error, "unknown partition scheme");
    scheme_ = static_cast<Scheme>(scheme);
    elem_width_ = r.u8();
    if (elem_width_ != 32 && elem_width_ != 64) fail(errc::format_error, "bad element width");
    if (r.u8() != 0) fail(errc::format_error, "reserved byte set");
    n_ = r.u64();
    const uint64_t m = r.u64();
    fixed_length_ = r.u64();
    if (n_ == 0 || n_ >= format::kMaxValues) fail(errc::format_error, "bad value count");
    if (m == 0 || m > n_) fail(errc::format_error, "bad partition count");
    if (scheme_ == Scheme::fixed) {
      if (fixed_length_ == 0 || (n_ + fixed_length_ - 1) / fixed_length_ != m)
        fail(errc::format_error, "fixed partition length inconsistent with n and m");
    } else if (fixed_length_ != 0) {
      fail(errc::format_error, "variable scheme must store L = 0");
    }
    if (r.remaining() / format::table_bytes(scheme_) < m) fail(errc::format_error, "container truncated");

    starts_.assign(m, 0);
    if (scheme_ == Scheme::variable) {
      for (uint64_t j = 0; j < m; ++j) {
        starts_[j] = r.u32();
        if (j == 0 ? starts_[j] != 0 : starts_[j] <= starts_[j - 1]) fail(errc::format_error, "start table not increasing from 0");
      }
      if (starts_.back() >= n_) fail(errc::format_error, "start table exceeds n");
    } else {
      for (uint64_t j = 0; j < m; ++j) starts_[j] = j * fixed_length_;
    }
    std::vector<uint64_t> offsets(m);
    for (auto& o : offsets) o = r.u32();
    const uint64_t blocks = r.pos();

    parts_.clear();
    parts_.reserve(m);
    for (uint64_t j = 0; j < m; ++j) {
      const uint64_t begin = starts_[j];
      const uint64_t end = j + 1 < m ? starts_[j + 1] : n_;
      const uint64_t at = blocks + offsets[j];
      if (at != r.pos()) fail(errc::format_error, "block offsets are not contiguous");
      parts_.push_back(parse_block(r, begin, end - begin));
    }
    if (r.remaining() != 0) fail(errc::format_error, "trailing bytes after last block");
  }

  PartitionInfo parse_block(ByteReader& r, uint64_t begin, uint64_t len) {
    PartitionInfo p;
    p.begin = begin;
    p.length = len;
    p.block_offset = r.pos();
    const uint8_t fam = r.u8();
    if (fam > static_cast<uint8_t>(Family::custom)) fail(errc::format_error, "unknown model family");
    p.phi = r.u8();
    if (p.phi > 64) fail(errc::format_error, "residual width above 64");
    const uint8_t ncoef = r.u8();
    p.model.family = static_cast<Family>(fam);
    p.model.theta.resize(ncoef);
    for (auto& t : p.model.theta) t = r.f64();
    if (p.model.family == Family::custom) {
      p.model.basis.resize(ncoef);
      for (auto& b : p.model.basis) {
        const uint8_t kind = r.u8();
        if (!BasisTerm::valid_kind(kind)) fail(errc::format_error, "unknown basis term");
        b.kind = static_cast<BasisKind>(kind);
        b.param = r.f64();
      }
    }
    if (p.model.family == Family::step) p.model.first = r.i64();
    try {
      p.model.validate();
    } catch (const error& e) {
      fail(errc::format_error, std::string("invalid model: ") + e.what());
    }
    if (p.model.family == Family::linear) {
      const uint32_t count = r.u32();
      p.accumulate = count != format::kNoAccumulation;
      if (p.accumulate) {
        if (count > len) fail(errc::format_error, "more corrections than positions");
        p.corrections.resize(count);
        for (uint32_t c = 0; c < count; ++c) {
          p.corrections[c].pos = r.u32();
          p.corrections[c].prediction = r.i64();
          if (p.corrections[c].pos >= len || (c > 0 && p.corrections[c].pos <= p.corrections[c - 1].pos))
            fail(errc::format_error, "corrections out of order");
        }
      }
    }
    p.header_bytes = r.pos() - p.block_offset;
    p.payload_offset = r.pos();
    p.payload_bytes = packed_bytes(len, p.phi);
    r.take(p.payload_bytes);
    return p;
  }

  std::vector<uint8_t> bytes_;
  std::vector<PartitionInfo> parts_;
  std::vector<uint64_t> starts_;
  uint64_t n_ = 0;
  uint64_t fixed_length_ = 0;
  unsigned elem_width_ = 64;
  Scheme scheme_ = Scheme::fixed;
};

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace detail {

/// Positions where accumulating theta1 from theta0 floors differently from
/// direct evaluation; each carries the direct prediction.
inline std::vector<Correction> accumulation_corrections(const RegressionModel& m, uint64_t len) {
  std::vector<Correction> out;
  double acc = m.theta[0];
  for (uint64_t k = 0; k < len; ++k) {
    const int64_t direct = predict_floor(m, k);
    const double f = std::floor(acc);
    const bool same = f >= -9223372036854775808.0 && f < 9223372036854775808.0 && static_cast<int64_t>(f) == direct;
    if (!same) out.push_back(Correction{static_cast<uint32_t>(k), direct});
    acc += m.theta[1];
  }
  return out;
}

inline void write_block(std::vector<uint8_t>& out, const RegressionModel& model, std::span<const int64_t> slice,
                        const EncodeOptions& opt) {
  ByteWriter w(out);
  const std::vector<int64_t> res = residuals(model, slice);
  const unsigned phi = required_bits(res);
  w.u8(static_cast<uint8_t>(model.family));
  w.u8(static_cast<uint8_t>(phi));
  w.u8(static_cast<uint8_t>(model.theta.size()));
  for (double t : model.theta) w.f64(t);
  if (model.family == Family::custom)
    for (const auto& b : model.basis) {
      w.u8(static_cast<uint8_t>(b.kind));
      w.f64(b.param);
    }
  if (model.family == Family::step) w.i64(model.first);
  if (model.family == Family::linear) {
    const auto corr = accumulation_corrections(model, slice.size());
    if (static_cast<double>(corr.size()) > opt.max_correction_fraction * static_cast<double>(slice.size())) {
      w.u32(format::kNoAccumulation);
    } else {
      w.u32(static_cast<uint32_t>(corr.size()));
      for (const auto& c : corr) {
        w.u32(c.pos);
        w.i64(c.prediction);
      }
    }
  }
  BitWriter bw(out);
  if (model.family == Family::step)
    for (int64_t d : res) bw.put(zigzag_encode(d), phi);
  else
    for (int64_t d : res) bw.put(to_offset_binary(d, phi), phi);
  bw.flush();
}

inline void check_layout(uint64_t n, const PartitionLayout& layout) {
  if (n >= format::kMaxValues) fail(errc::invalid_argument, "columns are limited to fewer than 2^32 values");
  layout.validate(n);
}

}  // namespace detail

/// Model a partition would be stored with under `family`. Fits that diverge
/// fall back to the zero constant, whose residuals are the values themselves.
inline RegressionModel fit_partition_model(std::span<const int64_t> slice, const FamilySpec& family, bool for_mode = false) {
  try {
    if (family.kind == Regressor::constant) return fit_constant_minimax(slice, for_mode).model;
    RegressionModel m = fit(slice, family).model;
    (void)residuals(m, slice);
    return m;
  } catch (const error& e) {
    if (e.code() != errc::model_divergence && e.code() != errc::singular_basis) throw;
    return RegressionModel::constant(0.0);
  }
}

/// Encodes with caller-supplied models, one per partition of `layout`.
inline CompressedColumn encode_column(const IntSequence& seq, const PartitionLayout& layout,
                                      std::span<const RegressionModel> models, const EncodeOptions& opt = {}) {
  detail::check_layout(seq.size(), layout);
  if (models.size() != layout.partition_count()) fail(errc::invalid_argument, "one model per partition required");
  const size_t m = layout.partition_count();
  std::vector<uint8_t> out;
  ByteWriter w(out);
  w.bytes(format::kMagic);
  w.u8(format::kVersion);
  w.u8(static_cast<uint8_t>(layout.scheme));
  w.u8(static_cast<uint8_t>(seq.elem_width()));
  w.u8(0);
  w.u64(seq.size());
  w.u64(m);
  w.u64(layout.scheme == Scheme::fixed ? layout.fixed_length : 0);
  if (layout.scheme == Scheme::variable)
    for (size_t j = 0; j < m; ++j) w.u32(static_cast<uint32_t>(layout.begin(j)));
  const size_t offsets_at = out.size();
  for (size_t j = 0; j < m; ++j) w.u32(0);
  const size_t blocks = out.size();
  const auto values = seq.values();
  for (size_t j = 0; j < m; ++j) {
    const uint64_t rel = out.size() - blocks;
    if (rel > 0xFFFFFFFFull) fail(errc::invalid_argument, "container exceeds 4 GiB");
    w.patch_u32(offsets_at + 4 * j, static_cast<uint32_t>(rel));
    models[j].validate();
    detail::write_block(out, models[j], values.subspan(layout.begin(j), layout.length(j)), opt);
  }
  return CompressedColumn::from_bytes(std::move(out));
}

/// Fits `family` on every partition of `layout` and encodes.
inline CompressedColumn encode_column(const IntSequence& seq, const PartitionLayout& layout, const FamilySpec& family,
                                      const EncodeOptions& opt = {}) {
  detail::check_layout(seq.size(), layout);
  std::vector<RegressionModel> models;
  models.reserve(layout.partition_count());
  const auto values = seq.values();
  for (size_t j = 0; j < layout.partition_count(); ++j)
    models.push_back(fit_partition_model(values.subspan(layout.begin(j), layout.length(j)), family, opt.for_mode));
  return encode_column(seq, layout, models, opt);
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

inline int64_t decode_at(const CompressedColumn& col, uint64_t i) { return col.at(i); }

namespace detail {

/// Decodes offsets [k0, k1) of one partition into `out`.
inline void decode_partition(const CompressedColumn& col, const PartitionInfo& p, uint64_t k0, uint64_t k1, int64_t* out) {
  const std::span<const uint8_t> data(col.bytes());
  const uint64_t base = p.payload_offset * 8;
  const unsigned phi = p.phi;
  switch (p.model.family) {
    case Family::step: {
      int64_t v = p.model.first;
      for (uint64_t t = 1; t <= k0; ++t) v = wrapping_add(v, zigzag_decode(read_bits(data, base + t * phi, phi)));
      for (uint64_t k = k0; k < k1; ++k) {
        if (k > k0) v = wrapping_add(v, zigzag_decode(read_bits(data, base + k * phi, phi)));
        *out++ = v;
      }
      return;
    }
    case Family::constant: {
      const int64_t pred = predict_floor(p.model, 0);
      for (uint64_t k = k0; k < k1; ++k) *out++ = wrapping_add(pred, from_offset_binary(read_bits(data, base + k * phi, phi), phi));
      return;
    }
    case Family::linear:
      if (p.accumulate) {
        const double t0 = p.model.theta[0], t1 = p.model.theta[1];
        double acc = t0;
        for (uint64_t k = 0; k < k0; ++k) acc += t1;
        auto corr = std::lower_bound(p.corrections.begin(), p.corrections.end(), k0,
                                     [](const Correction& c, uint64_t pos) { return c.pos < pos; });
        for (uint64_t k = k0; k < k1; ++k, acc += t1) {
          int64_t pred;
          if (corr != p.corrections.end() && corr->pos == k) {
            pred = corr->prediction;
            ++corr;
          } else {
            pred = floor_to_int64(acc);
          }
          *out++ = wrapping_add(pred, from_offset_binary(read_bits(data, base + k * phi, phi), phi));
        }
        return;
      }
      [[fallthrough]];
    default:
      for (uint64_t k = k0; k < k1; ++k)
        *out++ = wrapping_add(predict_floor(p.model, k), from_offset_binary(read_bits(data, base + k * phi, phi), phi));
  }
}

}  // namespace detail

/// Values at positions [lo, hi). Linear partitions use accumulated predictions.
inline std::vector<int64_t> decode_range(const CompressedColumn& col, uint64_t lo, uint64_t hi) {
  if (lo > hi || hi > col.size()) fail(errc::out_of_range, "range outside the column");
  std::vector<int64_t> out(hi - lo);
  if (lo == hi) return out;
  int64_t* dst = out.data();
  for (size_t j = col.locate(lo); j < col.partition_count(); ++j) {
    const PartitionInfo& p = col.partition(j);
    if (p.begin >= hi) break;
    const uint64_t k0 = std::max(lo, p.begin) - p.begin;
    const uint64_t k1 = std::min(hi, p.begin + p.length) - p.begin;
    detail::decode_partition(col, p, k0, k1, dst);
    dst += k1 - k0;
  }
  return out;
}

inline std::vector<int64_t> decode_all(const CompressedColumn& col) { return decode_range(col, 0, col.size()); }

struct FilterResult {
  std::vector<bool> matches;  // position bitmap
  uint64_t examined = 0;      // positions actually decoded
};

/// Positions whose value is below `alpha`. In linear partitions with a
/// non-negative slope, and constant partitions, decoding stops once the
/// smallest value the residual width allows is above `alpha`.
inline FilterResult filter_less_than(const CompressedColumn& col, int64_t alpha) {
  FilterResult r;
  r.matches.assign(col.size(), false);
  std::vector<int64_t> buf;
  for (size_t j = 0; j < col.partition_count(); ++j) {
    const PartitionInfo& p = col.partition(j);
    const bool prunable = p.model.family == Family::constant || (p.model.family == Family::linear && p.model.theta[1] >= 0);
    uint64_t stop = p.length;
    if (prunable) {
      const int128 half = p.phi == 0 ? 0 : (static_cast<int128>(1) << (p.phi - 1));
      // Lower bound floor(F(k)) - 2^(phi-1) is non-decreasing in k: binary search the first k above alpha.
      uint64_t lo = 0, hi = p.length;
      while (lo < hi) {
        const uint64_t mid = lo + (hi - lo) / 2;
        if (static_cast<int128>(predict_floor(p.model, mid)) - half > alpha) hi = mid;
        else lo = mid + 1;
      }
      stop = lo;
    }
    buf.resize(stop);
    if (stop > 0) detail::decode_partition(col, p, 0, stop, buf.data());
    r.examined += stop;
    for (uint64_t k = 0; k < stop; ++k)
      if (buf[k] < alpha) r.matches[p.begin + k] = true;
  }
  return r;
}

}  // namespace leco
