#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "leco/bits.hpp"
#include "leco/datasets.hpp"
#include "leco/error.hpp"
#include "leco/model.hpp"
#include "leco/regressor.hpp"

namespace leco {

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

inline constexpr size_t kFeatureCount = 6;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"log_range", "dev1", "dev2", "dev3", "trend", "divergence"};

struct FeatureVector {
  double log_range = 0;
  std::array<double, 3> dev{};  // k = 1, 2, 3
  double trend = 1;             // T
  double divergence = 0;        // D
  size_t subblock = 64;         // s actually used

  std::array<double, kFeatureCount> as_array() const { return {log_range, dev[0], dev[1], dev[2], trend, divergence}; }
};

struct FeatureOptions {
  size_t subblock = 64;
};

/// Needs n >= 8. dev_k is the mean absolute deviation of the k-th order
/// differences over their range; trend and divergence are the mean and the
/// spread of ratios between consecutive subblock ranges.
inline FeatureVector extract_features(std::span<const int64_t> seq, const FeatureOptions& opt = {}) {
  const size_t n = seq.size();
  if (n < 8) fail(errc::too_short, "feature extraction needs at least 8 values");
  FeatureVector f;
  const auto [lo, hi] = std::minmax_element(seq.begin(), seq.end());
  f.log_range = static_cast<double>(std::log2(static_cast<long double>(static_cast<int128>(*hi) - *lo) + 1.0L));

  std::vector<long double> d(seq.begin(), seq.end());
  for (size_t k = 1; k <= 3; ++k) {
    const size_t len = n - k;
    for (size_t i = 0; i < len; ++i) d[i] = d[i + 1] - d[i];
    const auto [dmin, dmax] = std::minmax_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(len));
    const long double spread = *dmax - *dmin;
    if (spread == 0) {
      f.dev[k - 1] = 0;
      continue;
    }
    const long double avg = std::accumulate(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(len), 0.0L) / len;
    long double dev = 0;
    for (size_t i = 0; i < len; ++i) dev += std::fabs(d[i] - avg);
    f.dev[k - 1] = static_cast<double>(std::clamp(dev / (static_cast<long double>(len) * spread), 0.0L, 1.0L));
  }

  f.subblock = std::max<size_t>(1, std::min(opt.subblock, n / 4));
  std::vector<long double> ranges;
  for (size_t b = 0; b + f.subblock <= n; b += f.subblock) {
    const auto [blo, bhi] = std::minmax_element(seq.begin() + static_cast<std::ptrdiff_t>(b),
                                                seq.begin() + static_cast<std::ptrdiff_t>(b + f.subblock));
    ranges.push_back(static_cast<long double>(static_cast<int128>(*bhi) - *blo));
  }
  std::vector<long double> ratios;
  for (size_t i = 1; i < ranges.size(); ++i)
    if (ranges[i - 1] != 0) ratios.push_back(ranges[i] / ranges[i - 1]);
  if (!ratios.empty()) {
    const auto [rmin, rmax] = std::minmax_element(ratios.begin(), ratios.end());
    f.trend = static_cast<double>(std::accumulate(ratios.begin(), ratios.end(), 0.0L) / ratios.size());
    f.divergence = static_cast<double>(*rmax - *rmin);
  }
  return f;
}

// ---------------------------------------------------------------------------
// CART
// ---------------------------------------------------------------------------

struct CartOptions {
  int max_depth = 8;
  size_t min_leaf = 5;
};

/// Binary classification tree stored as a flat node array; node 0 is the root.
struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0;
    int left = -1;     // taken when x[feature] <= threshold
    int right = -1;
    int label = 0;     // majority label at this node
  };
  std::vector<Node> nodes;

  int predict(std::span<const double> x) const {
    if (nodes.empty()) fail(errc::invalid_argument, "empty tree");
    int at = 0;
    while (nodes[at].feature >= 0) at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
    return nodes[at].label;
  }

  int depth() const {
    std::vector<int> dep(nodes.size(), 0);
    int best = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, dep[i]);
      if (nodes[i].feature >= 0) dep[nodes[i].left] = dep[nodes[i].right] = dep[i] + 1;
    }
    return best;
  }
};

namespace detail {

inline double gini(const std::vector<size_t>& counts, size_t total) {
  if (total == 0) return 0;
  double g = 1;
  for (size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    g -= p * p;
  }
  return g;
}

struct CartBuilder {
  const std::vector<std::array<double, kFeatureCount>>& x;
  const std::vector<int>& y;
  size_t classes;
  CartOptions opt;
  DecisionTree tree;

  int build(std::vector<size_t>& idx, int depth) {
    std::vector<size_t> counts(classes, 0);
    for (size_t i : idx) ++counts[y[i]];
    DecisionTree::Node node;
    node.label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const int at = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    const double parent = gini(counts, idx.size());
    if (depth >= opt.max_depth || parent == 0 || idx.size() < 2 * opt.min_leaf) return at;

    double best = parent - 1e-12;
    int best_f = -1;
    double best_t = 0;
    for (size_t f = 0; f < kFeatureCount; ++f) {
      std::vector<size_t> order = idx;
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a][f] < x[b][f]; });
      std::vector<size_t> left(classes, 0), right = counts;
      for (size_t p = 0; p + 1 < order.size(); ++p) {
        ++left[y[order[p]]];
        --right[y[order[p]]];
        const size_t nl = p + 1, nr = order.size() - nl;
        if (nl < opt.min_leaf || nr < opt.min_leaf) continue;
        const double a = x[order[p]][f], b = x[order[p + 1]][f];
        if (!(a < b)) continue;
        const double g = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) / order.size();
        if (g < best) {
          best = g;
          best_f = static_cast<int>(f);
          best_t = a + (b - a) / 2;
          if (!(best_t < b)) best_t = a;
        }
      }
    }
    if (best_f < 0) return at;
    std::vector<size_t> l, r;
    for (size_t i : idx) (x[i][best_f] <= best_t ? l : r).push_back(i);
    tree.nodes[at].feature = best_f;
    tree.nodes[at].threshold = best_t;
    const int li = build(l, depth + 1);
    const int ri = build(r, depth + 1);
    tree.nodes[at].left = li;
    tree.nodes[at].right = ri;
    return at;
  }
};

}  // namespace detail

/// Gini-impurity CART. Labels are 0..classes-1.
inline DecisionTree train_cart(const std::vector<std::array<double, kFeatureCount>>& x, const std::vector<int>& y, size_t classes,
                               const CartOptions& opt = {}) {
  if (x.size() != y.size() || x.empty()) fail(errc::invalid_argument, "training set is empty or misaligned");
  for (int label : y)
    if (label < 0 || static_cast<size_t>(label) >= classes) fail(errc::invalid_argument, "label out of range");
  detail::CartBuilder b{x, y, classes, opt, {}};
  std::vector<size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  b.build(idx, 0);
  return b.tree;
}

// ---------------------------------------------------------------------------
// Regressor selector
// ---------------------------------------------------------------------------

inline const std::vector<Regressor>& selector_families() {
  static const std::vector<Regressor> f = {Regressor::constant, Regressor::linear, Regressor::poly2,
                                           Regressor::poly3,    Regressor::exp,    Regressor::log};
  return f;
}

struct SelectorModel {
  DecisionTree tree;
  std::vector<Regressor> labels;  // class index -> family
  FeatureOptions features;

  Regressor predict(const FeatureVector& f) const {
    const auto x = f.as_array();
    return labels.at(static_cast<size_t>(tree.predict(x)));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "leco-selector";
    j["version"] = 1;
    j["subblock"] = features.subblock;
    j["features"] = kFeatureNames;
    for (Regressor r : labels) j["labels"].push_back(to_string(r));
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : tree.nodes)
      j["nodes"].push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}, {"label", n.label}});
    return j;
  }

  static SelectorModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "leco-selector" || j.at("version") != 1) fail(errc::parse_error, "not a selector model");
      SelectorModel m;
      m.features.subblock = j.at("subblock").get<size_t>();
      for (const auto& l : j.at("labels")) m.labels.push_back(parse_regressor(l.get<std::string>()));
      for (const auto& n : j.at("nodes")) {
        DecisionTree::Node node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.label = n.at("label").get<int>();
        m.tree.nodes.push_back(node);
      }
      const int count = static_cast<int>(m.tree.nodes.size());
      if (count == 0) fail(errc::parse_error, "selector has no nodes");
      for (const auto& node : m.tree.nodes) {
        if (node.label < 0 || static_cast<size_t>(node.label) >= m.labels.size()) fail(errc::parse_error, "leaf label out of range");
        if (node.feature >= static_cast<int>(kFeatureCount)) fail(errc::parse_error, "feature index out of range");
        if (node.feature >= 0 && (node.left <= 0 || node.right <= 0 || node.left >= count || node.right >= count))
          fail(errc::parse_error, "child index out of range");
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      fail(errc::parse_error, std::string("selector json: ") + e.what());
    }
  }
};

struct LabeledSequence {
  std::vector<int64_t> values;
  Regressor family;
};

/// One synthetic sequence of the given family with random shape and noise.
/// Values stay inside the 32-bit range.
inline std::vector<int64_t> synthetic_sequence(Regressor family, size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo_exp, double hi_exp) { return std::exp2(lo_exp + (hi_exp - lo_exp) * unit(rng)); };
  const double noise = std::floor(log_uniform(0, 8));
  std::uniform_int_distribution<int64_t> jitter(-static_cast<int64_t>(noise), static_cast<int64_t>(noise));
  const double span = log_uniform(18, 29);  // target value range
  const double offset = (unit(rng) - 0.5) * std::exp2(29);
  const double dn = static_cast<double>(n - 1);
  std::vector<double> shape(n);
  switch (family) {
    case Regressor::constant:
      for (auto& s : shape) s = 0;
      break;
    case Regressor::linear: {
      const double dir = unit(rng) < 0.5 ? -1 : 1;
      for (size_t i = 0; i < n; ++i) shape[i] = dir * span * static_cast<double>(i) / dn;
      break;
    }
    case Regressor::poly2: {
      const double c = 0.15 + 0.7 * unit(rng), dir = unit(rng) < 0.5 ? -1 : 1;
      for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / dn - c;
        shape[i] = dir * span * t * t;
      }
      break;
    }
    case Regressor::poly3: {
      const double r1 = 0.1 + 0.2 * unit(rng), r2 = 0.4 + 0.2 * unit(rng), r3 = 0.7 + 0.2 * unit(rng);
      const double dir = unit(rng) < 0.5 ? -1 : 1;
      for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / dn;
        shape[i] = dir * span * 8 * (t - r1) * (t - r2) * (t - r3);
      }
      break;
    }
    case Regressor::exp: {
      const double rate = 4 + 8 * unit(rng);
      const double scale = span / std::expm1(rate);
      for (size_t i = 0; i < n; ++i) shape[i] = scale * std::exp(rate * static_cast<double>(i) / dn);
      break;
    }
    case Regressor::log: {
      const double scale = span / std::log1p(dn);
      for (size_t i = 0; i < n; ++i) shape[i] = scale * std::log1p(static_cast<double>(i));
      break;
    }
    default: fail(errc::invalid_argument, "no synthetic generator for this family");
  }
  std::vector<int64_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    const double v = std::round(offset + shape[i]) + static_cast<double>(jitter(rng));
    out[i] = static_cast<int64_t>(std::clamp(v, -2147483648.0, 2147483647.0));
  }
  return out;
}

/// `per_family` sequences of each selector family, lengths uniform in [min_n, max_n].
inline std::vector<LabeledSequence> synthetic_corpus(size_t per_family, uint64_t seed, size_t min_n = 512, size_t max_n = 2048) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> len(min_n, max_n);
  std::vector<LabeledSequence> out;
  for (size_t k = 0; k < per_family; ++k)
    for (Regressor r : selector_families()) out.push_back({synthetic_sequence(r, len(rng), rng), r});
  return out;
}

inline SelectorModel train_selector(const std::vector<LabeledSequence>& corpus, const CartOptions& opt = {},
                                    const FeatureOptions& fopt = {}) {
  std::map<Regressor, size_t> per_label;
  for (const auto& s : corpus) ++per_label[s.family];
  if (per_label.size() < 2) fail(errc::insufficient_classes, "selector training needs at least two families");
  for (const auto& [r, count] : per_label)
    if (count < 50) fail(errc::insufficient_classes, std::string("family ") + to_string(r) + " has fewer than 50 sequences");
  SelectorModel m;
  m.features = fopt;
  std::map<Regressor, int> index;
  for (const auto& [r, count] : per_label) {
    index[r] = static_cast<int>(m.labels.size());
    m.labels.push_back(r);
  }
  std::vector<std::array<double, kFeatureCount>> x;
  std::vector<int> y;
  for (const auto& s : corpus) {
    x.push_back(extract_features(s.values, fopt).as_array());
    y.push_back(index[s.family]);
  }
  m.tree = train_cart(x, y, m.labels.size(), opt);
  return m;
}

/// Constant and arithmetic sequences fit exactly and skip the tree.
inline Regressor recommend_regressor(std::span<const int64_t> seq, const SelectorModel& selector) {
  const auto f = extract_features(seq, selector.features);
  if (f.log_range == 0) return Regressor::constant;
  if (f.dev[0] == 0) return Regressor::linear;
  return selector.predict(f);
}

// ---------------------------------------------------------------------------
// Partitioning advice
// ---------------------------------------------------------------------------

struct PlaSegment {
  uint64_t begin;
  uint64_t end;
  double slope;
};

/// Greedy PLA anchored at each segment's first point: a segment grows while
/// the interval of slopes keeping every point within +-eps stays non-empty.
inline std::vector<PlaSegment> pla_segments(std::span<const int64_t> seq, double eps) {
  if (!(eps >= 0)) fail(errc::invalid_argument, "error bound must be non-negative");
  std::vector<PlaSegment> out;
  const uint64_t n = seq.size();
  const long double e = eps;
  uint64_t begin = 0;
  while (begin < n) {
    long double lo = -std::numeric_limits<long double>::infinity(), hi = std::numeric_limits<long double>::infinity();
    const long double y0 = static_cast<long double>(seq[begin]);
    uint64_t end = begin + 1;
    for (; end < n; ++end) {
      const long double dx = static_cast<long double>(end - begin);
      const long double y = static_cast<long double>(seq[end]) - y0;
      const long double nlo = std::max(lo, (y - e) / dx), nhi = std::min(hi, (y + e) / dx);
      if (nlo > nhi) break;
      lo = nlo;
      hi = nhi;
    }
    const double slope = std::isinf(lo) ? 0.0 : static_cast<double>(std::isinf(hi) ? lo : (lo + hi) / 2);
    out.push_back({begin, end, slope});
    begin = end;
  }
  return out;
}

struct HardnessScores {
  double local = 0;   // H_l
  double global = 0;  // H_g
};

struct HardnessOptions {
  double local_eps = 7;
  double global_eps = 4096;
};

inline HardnessScores hardness_scores(std::span<const int64_t> seq, const HardnessOptions& opt = {}) {
  const uint64_t n = seq.size();
  if (n < 16) fail(errc::too_short, "hardness needs at least 16 values");
  HardnessScores h;
  h.local = static_cast<double>(pla_segments(seq, opt.local_eps).size()) / static_cast<double>(n);
  const auto segs = pla_segments(seq, opt.global_eps);
  if (segs.size() > 1) {
    const auto [lo, hi] = std::minmax_element(seq.begin(), seq.end());
    const long double range = static_cast<long double>(static_cast<int128>(*hi) - *lo);
    long double gap = 0;
    for (size_t s = 1; s < segs.size(); ++s)
      gap += std::fabs(static_cast<long double>(static_cast<int128>(seq[segs[s].begin]) - seq[segs[s - 1].end - 1]));
    gap /= static_cast<long double>(segs.size() - 1);
    const long double mean_len = static_cast<long double>(n) / segs.size();
    long double var = 0;
    for (const auto& s : segs) {
      const long double d = static_cast<long double>(s.end - s.begin) - mean_len;
      var += d * d;
    }
    var /= segs.size();
    h.global = static_cast<double>((range > 0 ? gap / range : 0) + var / (mean_len * mean_len));
  }
  return h;
}

struct HardnessThresholds {
  double local = 0;
  double global = 0;
};

/// Variable-length partitioning pays off when data is locally easy but globally hard.
inline Scheme advise_partitioning(const HardnessScores& s, const HardnessThresholds& t) {
  return s.local < t.local && s.global > t.global ? Scheme::variable : Scheme::fixed;
}

/// Reference datasets whose mean hardness provides the default thresholds.
inline std::vector<IntSequence> reference_corpus(uint64_t n = 1 << 15, uint64_t seed = 7) {
  std::vector<IntSequence> out;
  GenerateParams p;
  p.jitter = 100;
  out.push_back(generate(DatasetKind::linear, n, seed, p));
  out.push_back(generate(DatasetKind::normal, n, seed + 1));
  out.push_back(generate(DatasetKind::poisson, n, seed + 2));
  GenerateParams q;
  q.rate = 0.05;
  out.push_back(generate(DatasetKind::poisson, n, seed + 3, q));
  // Piecewise linear with level jumps, and a bounded random walk.
  std::mt19937_64 rng(seed + 4);
  std::vector<int64_t> pw(n), walk(n);
  int64_t level = 0, slope = 50, x = 0;
  for (uint64_t i = 0; i < n; ++i) {
    if (i % 4096 == 0) {
      level += static_cast<int64_t>(rng() % (1u << 24));
      slope = 1 + static_cast<int64_t>(rng() % 400);
    }
    level += slope;
    pw[i] = level + static_cast<int64_t>(rng() % 8);
    x += static_cast<int64_t>(rng() % 2001) - 1000;
    walk[i] = x;
  }
  out.emplace_back(std::move(pw), 64);
  out.emplace_back(std::move(walk), 64);
  return out;
}

inline HardnessThresholds thresholds_from(std::span<const IntSequence> corpus, const HardnessOptions& opt = {}) {
  HardnessThresholds t;
  for (const auto& s : corpus) {
    const auto h = hardness_scores(s.values(), opt);
    t.local += h.local;
    t.global += h.global;
  }
  t.local /= static_cast<double>(corpus.size());
  t.global /= static_cast<double>(corpus.size());
  return t;
}

inline const HardnessThresholds& reference_thresholds() {
  static const HardnessThresholds t = [] {
    const auto corpus = reference_corpus();
    return thresholds_from(corpus);
  }();
  return t;
}

}  // namespace leco
