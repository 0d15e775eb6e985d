#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "leco/bits.hpp"
#include "leco/error.hpp"
#include "leco/format.hpp"
#include "leco/model.hpp"
#include "leco/regressor.hpp"

namespace leco {

struct PartitionCostModel {
  uint64_t model_size_bits = 0;  // S_M
  double tau = 0.1;

  void validate() const {
    if (model_size_bits == 0) fail(errc::invalid_argument, "model size must be positive");
    if (!(tau >= 0.0 && tau <= 1.0)) fail(errc::invalid_argument, "tau must be in [0, 1]");
  }
};

/// Cost model whose S_M is the on-disk per-partition overhead of `family`.
inline PartitionCostModel cost_model_for(const FamilySpec& family, Scheme scheme = Scheme::variable, double tau = 0.1) {
  return PartitionCostModel{format::model_size_bits(family, scheme), tau};
}

// ---------------------------------------------------------------------------
// Residual width of a growing slice
// ---------------------------------------------------------------------------

/// Delta of a slice [begin, end), maintained as points are appended or
/// slices concatenated. Constant, step and linear update in place. Other
/// families keep the last fitted model while it still covers each appended
/// point at the current width, and refit the slice otherwise. Exp slices
/// reuse the last searched rate until they double in length.
class SliceDelta {
 public:
  SliceDelta(std::span<const int64_t> seq, const FamilySpec& family, uint64_t begin)
      : seq_(seq), family_(&family), begin_(begin), end_(begin) {}

  static SliceDelta of(std::span<const int64_t> seq, const FamilySpec& family, uint64_t begin, uint64_t end) {
    SliceDelta s(seq, family, begin);
    while (s.end_ < end) s.append_committed();
    s.refresh_generic();
    return s;
  }

  uint64_t begin() const noexcept { return begin_; }
  uint64_t end() const noexcept { return end_; }
  uint64_t length() const noexcept { return end_ - begin_; }
  unsigned bits() const noexcept { return bits_; }

  /// Delta of the slice extended by one point; follow with commit() or rollback().
  unsigned try_extend() {
    saved_ = State{lo_, hi_, bits_};
    if (family_->kind == Regressor::linear) band_.try_push(static_cast<int64_t>(end_), seq_[end_]);
    absorb(end_);
    ++end_;
    if (generic() && !covers_last()) {
      saved_model_ = model_;
      saved_fitted_ = fitted_;
      saved_searched_ = searched_;
      refitted_ = true;
      refresh_generic();
    } else {
      refitted_ = false;
    }
    return bits_;
  }
  void commit() { band_.commit(); }
  void rollback() {
    --end_;
    if (family_->kind == Regressor::linear) band_.rollback();
    lo_ = saved_.lo;
    hi_ = saved_.hi;
    bits_ = saved_.bits;
    if (refitted_) {
      model_ = std::move(saved_model_);
      fitted_ = saved_fitted_;
      searched_ = saved_searched_;
    }
  }

  /// Delta of two adjacent slices joined.
  static SliceDelta merge(const SliceDelta& a, const SliceDelta& b) {
    if (a.end_ != b.begin_) fail(errc::invalid_argument, "slices must be adjacent");
    SliceDelta out(a.seq_, *a.family_, a.begin_);
    out.end_ = b.end_;
    switch (a.family_->kind) {
      case Regressor::constant:
        out.lo_ = std::min(a.lo_, b.lo_);
        out.hi_ = std::max(a.hi_, b.hi_);
        break;
      case Regressor::step: {
        const int64_t d = wrapping_sub(a.seq_[b.begin_], a.seq_[b.begin_ - 1]);
        out.lo_ = std::min({a.lo_, b.lo_, d});
        out.hi_ = std::max({a.hi_, b.hi_, d});
        break;
      }
      case Regressor::linear: out.band_ = LinearBand::merge(a.band_, b.band_); break;
      default: break;
    }
    out.update_bits();
    if (out.generic()) {
      // Reuse the left model when it covers the right slice at its width.
      out.model_ = a.model_;
      out.fitted_ = a.fitted_;
      out.lo_ = a.lo_;
      out.hi_ = a.hi_;
      out.bits_ = a.bits_;
      bool covered = true;
      for (out.end_ = b.begin_ + 1; covered && out.end_ <= b.end_; ++out.end_) covered = out.covers_last();
      out.end_ = b.end_;
      if (!covered) out.refresh_generic();
    }
    return out;
  }

 private:
  struct State {
    int64_t lo, hi;
    unsigned bits;
  };

  bool generic() const noexcept {
    const auto k = family_->kind;
    return k != Regressor::constant && k != Regressor::step && k != Regressor::linear;
  }

  void append_committed() {
    if (family_->kind == Regressor::linear) band_.push(static_cast<int64_t>(end_), seq_[end_]);
    absorb(end_);
    ++end_;
  }

  void absorb(uint64_t pos) {
    switch (family_->kind) {
      case Regressor::constant:
        if (pos == begin_) lo_ = hi_ = seq_[pos];
        lo_ = std::min(lo_, seq_[pos]);
        hi_ = std::max(hi_, seq_[pos]);
        break;
      case Regressor::step:
        if (pos > begin_) {
          const int64_t d = wrapping_sub(seq_[pos], seq_[pos - 1]);
          lo_ = std::min(lo_, d);
          hi_ = std::max(hi_, d);
        }
        break;
      default: break;
    }
    update_bits();
  }

  void update_bits() {
    switch (family_->kind) {
      case Regressor::constant:
        bits_ = unsigned_bits(static_cast<uint64_t>(hi_) - static_cast<uint64_t>(lo_));
        break;
      case Regressor::step: bits_ = required_bits_for_range(lo_, hi_); break;
      case Regressor::linear: bits_ = band_.bits(); break;
      default: break;
    }
  }

  /// Whether the fitted model absorbs the newest point without widening.
  bool covers_last() {
    if (!fitted_) return false;
    try {
      const int64_t r = residual_against(seq_[end_ - 1], predict_floor(model_, end_ - 1 - begin_));
      if (required_bits_for_range(std::min(lo_, r), std::max(hi_, r)) != bits_) return false;
      lo_ = std::min(lo_, r);
      hi_ = std::max(hi_, r);
      return true;
    } catch (const error& e) {
      if (e.code() != errc::model_divergence) throw;
      return false;
    }
  }

  void refresh_generic() {
    if (!generic() || end_ == begin_) return;
    const auto slice = seq_.subspan(begin_, end_ - begin_);
    try {
      const bool keep_rate = family_->kind == Regressor::exp && fitted_ && model_.family == Family::custom && slice.size() < 2 * searched_;
      if (!keep_rate) searched_ = slice.size();
      FitResult f = keep_rate ? fit_custom_basis_minimax(slice, model_.basis, /*drop_singular=*/true) : fit(slice, *family_);
      const auto res = residuals(f.model, slice);
      const auto [lo, hi] = std::minmax_element(res.begin(), res.end());
      lo_ = *lo;
      hi_ = *hi;
      bits_ = f.phi;
      model_ = std::move(f.model);
      fitted_ = true;
    } catch (const error& e) {
      if (e.code() != errc::model_divergence && e.code() != errc::singular_basis) throw;
      bits_ = 64;
      fitted_ = false;
    }
  }

  std::span<const int64_t> seq_;
  const FamilySpec* family_;
  uint64_t begin_, end_;
  int64_t lo_ = 0, hi_ = 0;
  unsigned bits_ = 0;
  LinearBand band_;
  State saved_{};
  RegressionModel model_, saved_model_;  // generic families
  bool fitted_ = false, saved_fitted_ = false, refitted_ = false;
  uint64_t searched_ = 0, saved_searched_ = 0;  // slice length at the last full exp search
};

// ---------------------------------------------------------------------------
// Costs
// ---------------------------------------------------------------------------

/// S_M + len * Delta(slice).
inline uint64_t partition_size_bits(std::span<const int64_t> slice, const FamilySpec& family, const PartitionCostModel& cost) {
  if (slice.empty()) fail(errc::invalid_argument, "empty slice");
  return cost.model_size_bits + slice.size() * SliceDelta::of(slice, family, 0, slice.size()).bits();
}

/// C = (len + 1) * Delta(slice + next) - len * Delta(slice).
inline int64_t inclusion_cost(std::span<const int64_t> slice, int64_t next, const FamilySpec& family) {
  if (slice.empty()) fail(errc::invalid_argument, "empty slice");
  std::vector<int64_t> grown(slice.begin(), slice.end());
  grown.push_back(next);
  SliceDelta d = SliceDelta::of(grown, family, 0, slice.size());
  const int64_t before = static_cast<int64_t>(slice.size()) * d.bits();
  const int64_t after = static_cast<int64_t>(slice.size() + 1) * d.try_extend();
  return after - before;
}

/// Total size in bits of `layout` under one family, per the cost model.
inline uint64_t layout_size_bits(std::span<const int64_t> seq, const PartitionLayout& layout, const FamilySpec& family,
                                 const PartitionCostModel& cost) {
  uint64_t total = 0;
  for (size_t j = 0; j < layout.partition_count(); ++j)
    total += cost.model_size_bits + layout.length(j) * SliceDelta::of(seq, family, layout.begin(j), layout.end(j)).bits();
  return total;
}

// ---------------------------------------------------------------------------
// Fixed-length partitioning
// ---------------------------------------------------------------------------

inline PartitionLayout partition_fixed(uint64_t n, uint64_t length) {
  if (length < 1) fail(errc::invalid_argument, "partition length must be at least 1");
  if (n < 1) fail(errc::invalid_argument, "empty sequence");
  PartitionLayout l;
  l.scheme = Scheme::fixed;
  l.fixed_length = length;
  for (uint64_t b = 0; b < n; b += length) l.boundaries.push_back(b);
  l.boundaries.push_back(n);
  return l;
}

struct FixedSearchOptions {
  uint64_t max_sample = 10000;    // N_max
  double sample_fraction = 0.009;  // below 1%
  uint64_t seed = 42;
};

struct FixedSearchProbe {
  uint64_t length;
  double ratio;
};

/// Sampled search for the fixed partition length: exponential probing over
/// powers of two past the minimum, then halving refinement until the ratio
/// improves by less than 0.01%.
inline uint64_t search_fixed_length(std::span<const int64_t> seq, const FamilySpec& family, const FixedSearchOptions& opt = {},
                                    std::vector<FixedSearchProbe>* probes = nullptr) {
  const uint64_t n = seq.size();
  if (n == 0) fail(errc::invalid_argument, "empty sequence");
  if (opt.max_sample == 0) fail(errc::invalid_argument, "sample length must be positive");
  std::vector<std::span<const int64_t>> samples;
  if (n <= opt.max_sample) {
    samples.push_back(seq);
  } else {
    const uint64_t count = std::max<uint64_t>(1, static_cast<uint64_t>(opt.sample_fraction * static_cast<double>(n) /
                                                                       static_cast<double>(opt.max_sample)));
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<uint64_t> pick(0, n - opt.max_sample);
    for (uint64_t s = 0; s < count; ++s) samples.push_back(seq.subspan(pick(rng), opt.max_sample));
  }
  const uint64_t span = samples.front().size();
  const PartitionCostModel cost = cost_model_for(family, Scheme::fixed);
  auto ratio_at = [&](uint64_t length) {
    uint64_t bits = 0, raw = 0;
    for (const auto& s : samples) {
      bits += layout_size_bits(s, partition_fixed(s.size(), length), family, cost);
      raw += 64 * s.size();
    }
    const double r = static_cast<double>(bits) / static_cast<double>(raw);
    if (probes) probes->push_back({length, r});
    return r;
  };
  auto better = [](double r, uint64_t l, double best_r, uint64_t best_l) {
    return r < best_r || (r == best_r && l > best_l);
  };

  uint64_t best_l = 1;
  double best_r = ratio_at(1);
  int worse = 0;
  for (uint64_t l = 2; l <= span && worse < 2; l *= 2) {
    const double r = ratio_at(l);
    if (better(r, l, best_r, best_l)) {
      best_l = l;
      best_r = r;
      worse = 0;
    } else {
      ++worse;
    }
  }
  for (uint64_t step = best_l / 2; step >= 1; step /= 2) {
    std::optional<std::pair<uint64_t, double>> cand;
    for (uint64_t l : {best_l + step, best_l - step}) {
      if (l < 1 || l > span) continue;
      const double r = ratio_at(l);
      if (!cand || better(r, l, cand->second, cand->first)) cand = std::pair{l, r};
    }
    if (!cand || (best_r - cand->second) < 1e-4 * best_r) break;
    best_l = cand->first;
    best_r = cand->second;
  }
  return std::min(best_l, n);
}

// ---------------------------------------------------------------------------
// Variable-length partitioning
// ---------------------------------------------------------------------------

struct Seed {
  uint64_t begin;
  uint64_t end;
  friend bool operator==(const Seed&, const Seed&) = default;
};

struct SeedOptions {
  /// Upper bound on seed count; 0 means max(2, n / 16).
  uint64_t max_seeds = 0;
};

/// Windows where the sequence is locally smoothest for the family: local
/// minima of |(k+1)-th order differences| for degree-k models, or of the
/// change in residual width between adjacent differences for step models.
/// Chosen smoothest first, non-overlapping, returned in position order.
inline std::vector<Seed> select_start_positions(std::span<const int64_t> seq, const FamilySpec& family,
                                                const SeedOptions& opt = {}) {
  const uint64_t n = seq.size();
  struct Candidate {
    uint64_t begin;
    int128 metric;
    unsigned tie;
  };
  std::vector<Candidate> cands;
  uint64_t window = 0;
  std::vector<int128> metric;
  std::vector<unsigned> tie;
  if (family.kind == Regressor::step) {
    window = 3;
    if (n < window) return {};
    std::vector<unsigned> b(n, 0);
    for (uint64_t i = 1; i < n; ++i) b[i] = required_bits(wrapping_sub(seq[i], seq[i - 1]));
    for (uint64_t i = 2; i < n; ++i) {
      metric.push_back(b[i] > b[i - 1] ? b[i] - b[i - 1] : b[i - 1] - b[i]);
      tie.push_back(std::max(b[i], b[i - 1]));
    }
  } else {
    const int k = family.degree();
    window = static_cast<uint64_t>(k) + 2;
    if (n < window) return {};
    std::vector<int128> d(seq.begin(), seq.end());
    for (int order = 0; order <= k; ++order)
      for (size_t i = 0; i + 1 < d.size() - order; ++i) d[i] = d[i + 1] - d[i];
    for (uint64_t p = 0; p + window <= n; ++p) {
      metric.push_back(d[p] < 0 ? -d[p] : d[p]);
      tie.push_back(0);
    }
  }
  for (size_t p = 0; p < metric.size(); ++p) {
    const bool left = p == 0 || metric[p] <= metric[p - 1];
    const bool right = p + 1 == metric.size() || metric[p] <= metric[p + 1];
    if (left && right) cands.push_back({p, metric[p], tie[p]});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.metric != b.metric ? a.metric < b.metric : a.tie < b.tie;
  });
  const uint64_t cap = opt.max_seeds ? opt.max_seeds : std::max<uint64_t>(2, n / 16);
  std::vector<bool> taken(n, false);
  std::vector<Seed> seeds;
  for (const auto& c : cands) {
    if (seeds.size() >= cap) break;
    bool clash = false;
    for (uint64_t q = c.begin; q < c.begin + window && !clash; ++q) clash = taken[q];
    if (clash) continue;
    for (uint64_t q = c.begin; q < c.begin + window; ++q) taken[q] = true;
    seeds.push_back({c.begin, c.begin + window});
  }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.begin < b.begin; });
  return seeds;
}

/// Decisions taken by partition_variable, for inspection.
struct PartitionTrace {
  struct Inclusion {
    uint64_t partition_begin;
    uint64_t position;
    int64_t cost;
  };
  struct Merge {
    uint64_t begin, middle, end;
    uint64_t merged_bits, separate_bits;
  };
  std::vector<Seed> seeds;
  std::vector<Inclusion> inclusions;
  std::vector<uint64_t> split_boundaries;
  std::vector<Merge> merges;
};

/// Split/merge greedy. Seeds grow rightward while the inclusion cost stays
/// within tau * S_M; points between seeds are swept left to right, opening a
/// new partition whenever the threshold is exceeded. Adjacent partitions are
/// then merged left to right while merging shrinks the total, until a pass
/// makes no change. A merge is deferred when the right partition would save
/// more by merging with its own right neighbour.
inline PartitionLayout partition_variable(std::span<const int64_t> seq, const FamilySpec& family, const PartitionCostModel& cost,
                                          PartitionTrace* trace = nullptr, const SeedOptions& seed_opt = {}) {
  cost.validate();
  const uint64_t n = seq.size();
  if (n == 0) fail(errc::invalid_argument, "empty sequence");
  const std::vector<Seed> seeds = select_start_positions(seq, family, seed_opt);
  if (trace) trace->seeds = seeds;
  const double threshold = cost.tau * static_cast<double>(cost.model_size_bits);

  std::vector<SliceDelta> parts;
  size_t next_seed = 0;
  uint64_t cur = 0;
  while (cur < n) {
    uint64_t initial = cur + 1;
    if (next_seed < seeds.size() && seeds[next_seed].begin == cur) initial = seeds[next_seed++].end;
    const uint64_t limit = next_seed < seeds.size() ? seeds[next_seed].begin : n;
    SliceDelta part = SliceDelta::of(seq, family, cur, initial);
    while (part.end() < limit) {
      const int64_t before = static_cast<int64_t>(part.length()) * part.bits();
      const int64_t after = static_cast<int64_t>(part.length() + 1) * part.try_extend();
      const int64_t c = after - before;
      if (static_cast<double>(c) <= threshold) {
        part.commit();
        if (trace) trace->inclusions.push_back({part.begin(), part.end() - 1, c});
      } else {
        part.rollback();
        break;
      }
    }
    cur = part.end();
    parts.push_back(std::move(part));
  }
  if (trace)
    for (const auto& p : parts) trace->split_boundaries.push_back(p.begin());

  auto size_of = [&](const SliceDelta& p) { return cost.model_size_bits + p.length() * p.bits(); };
  const bool refits = family.kind != Regressor::constant && family.kind != Regressor::step && family.kind != Regressor::linear;
  struct Candidate {
    SliceDelta merged;
    uint64_t joined, apart;
    uint64_t saving() const { return apart - joined; }
  };
  auto attempt = [&](const SliceDelta& a, const SliceDelta& b) -> std::optional<Candidate> {
    const uint64_t apart = size_of(a) + size_of(b);
    // Refitting families skip the fit when even the wider of the two widths cannot pay off.
    if (refits && cost.model_size_bits + (a.length() + b.length()) * std::max(a.bits(), b.bits()) >= apart) return std::nullopt;
    SliceDelta merged = SliceDelta::merge(a, b);
    const uint64_t joined = size_of(merged);
    if (joined >= apart) return std::nullopt;
    return Candidate{std::move(merged), joined, apart};
  };
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<SliceDelta> out;
    out.reserve(parts.size());
    out.push_back(std::move(parts[0]));
    std::optional<Candidate> ahead;  // parts[j] with parts[j + 1], kept while parts[j] is left alone
    bool have_ahead = false;
    for (size_t j = 1; j < parts.size(); ++j) {
      SliceDelta& acc = out.back();
      std::optional<Candidate> here = have_ahead ? std::move(ahead) : attempt(acc, parts[j]);
      have_ahead = false;
      if (here && j + 1 < parts.size()) {
        // Leave parts[j] for its right neighbour when that merge saves more.
        ahead = attempt(parts[j], parts[j + 1]);
        if (ahead && ahead->saving() > here->saving()) {
          have_ahead = true;
          out.push_back(std::move(parts[j]));
          continue;
        }
      }
      if (here) {
        if (trace) trace->merges.push_back({acc.begin(), parts[j].begin(), parts[j].end(), here->joined, here->apart});
        acc = std::move(here->merged);
        changed = true;
      } else {
        out.push_back(std::move(parts[j]));
      }
    }
    parts = std::move(out);
  }

  PartitionLayout layout;
  layout.scheme = Scheme::variable;
  for (const auto& p : parts) layout.boundaries.push_back(p.begin());
  layout.boundaries.push_back(n);
  return layout;
}

inline constexpr uint64_t kDpOracleLimit = 4096;

/// Exact minimum of the summed partition sizes over all layouts. Ties go to
/// fewer partitions, then the lexicographically smallest boundary list.
inline PartitionLayout dp_optimal_partition(std::span<const int64_t> seq, const FamilySpec& family, const PartitionCostModel& cost) {
  cost.validate();
  const uint64_t n = seq.size();
  if (n == 0) fail(errc::invalid_argument, "empty sequence");
  if (n > kDpOracleLimit) fail(errc::oracle_size_limit, "optimal partitioning is limited to 4096 values");
  struct Best {
    uint64_t bits;
    uint64_t count;
    uint64_t next;
  };
  std::vector<Best> best(n + 1, Best{0, 0, n});
  for (uint64_t i = n; i-- > 0;) {
    best[i] = Best{std::numeric_limits<uint64_t>::max(), 0, n};
    SliceDelta d(seq, family, i);
    for (uint64_t j = i + 1; j <= n; ++j) {
      d.try_extend();
      d.commit();
      const uint64_t bits = cost.model_size_bits + (j - i) * d.bits() + best[j].bits;
      const uint64_t count = 1 + best[j].count;
      if (bits < best[i].bits || (bits == best[i].bits && count < best[i].count)) best[i] = Best{bits, count, j};
    }
  }
  PartitionLayout layout;
  layout.scheme = Scheme::variable;
  for (uint64_t i = 0; i < n; i = best[i].next) layout.boundaries.push_back(i);
  layout.boundaries.push_back(n);
  return layout;
}

}  // namespace leco
