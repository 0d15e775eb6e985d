// One PASS/FAIL line per acceptance check. Exit status is nonzero if any
// gating check fails; informational measurements never fail the run.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "leco/leco.hpp"
#include "support/oracles.hpp"

using namespace leco;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::array<Regressor, 7> kFamilies = {Regressor::constant, Regressor::linear, Regressor::poly2, Regressor::poly3,
                                            Regressor::step,     Regressor::exp,    Regressor::log};

/// Sorted, unsorted, negative and duplicate-heavy shapes.
std::vector<int64_t> fuzz_values(std::mt19937_64& rng, size_t n) {
  std::vector<int64_t> v(n);
  const int64_t scale = int64_t{1} << (rng() % 48);
  const int64_t offset = static_cast<int64_t>(rng() % 2000001) - 1000000;
  switch (rng() % 6) {
    case 0:
      for (auto& x : v) x = static_cast<int64_t>(rng() % static_cast<uint64_t>(scale)) - scale / 2;
      break;
    case 1:
      for (size_t i = 0; i < n; ++i) v[i] = offset + 13 * static_cast<int64_t>(i) + static_cast<int64_t>(rng() % 64);
      break;
    case 2:
      for (size_t i = 0; i < n; ++i) v[i] = -static_cast<int64_t>(i * i) + offset;
      break;
    case 3:
      for (auto& x : v) x = offset + static_cast<int64_t>(rng() % 4);
      break;
    case 4:
      for (auto& x : v) x = static_cast<int64_t>(rng() >> (rng() % 64)) * (rng() % 2 ? 1 : -1);
      break;
    default: {
      int64_t x = offset;
      for (auto& e : v) e = x += static_cast<int64_t>(rng() % 1000) - 300;
      break;
    }
  }
  if (rng() % 3 == 0) std::sort(v.begin(), v.end());
  return v;
}

std::vector<int64_t> piecewise_noisy(std::mt19937_64& rng, size_t n) {
  std::vector<int64_t> v(n);
  int64_t base = static_cast<int64_t>(rng() % 100000);
  int64_t slope = static_cast<int64_t>(rng() % 200) - 50;
  const uint64_t noise = 1 + rng() % 32;
  const uint64_t run = 32 + rng() % 160;
  for (size_t i = 0; i < n; ++i) {
    if (rng() % run == 0) {
      base += static_cast<int64_t>(rng() % 200000) - 100000;
      slope = static_cast<int64_t>(rng() % 200) - 50;
    }
    base += slope;
    v[i] = base + static_cast<int64_t>(rng() % noise);
  }
  return v;
}

PartitionLayout random_layout(std::mt19937_64& rng, uint64_t n) {
  if (rng() % 2) return partition_fixed(n, 1 + rng() % n);
  PartitionLayout l;
  l.scheme = Scheme::variable;
  l.boundaries.push_back(0);
  for (uint64_t b = 1; b < n; ++b)
    if (rng() % 64 == 0) l.boundaries.push_back(b);
  l.boundaries.push_back(n);
  return l;
}

std::vector<std::string> lowercase_corpus(std::mt19937_64& rng, size_t n) {
  const std::string prefix = rng() % 2 ? "user_" : "";
  const int alphabet = 1 + static_cast<int>(rng() % 26);
  const size_t max_len = 1 + rng() % 12;
  std::vector<std::string> out(n);
  for (auto& s : out) {
    s = prefix;
    for (size_t k = rng() % (max_len + 1); k > 0; --k) s.push_back(static_cast<char>('a' + rng() % alphabet));
  }
  return out;
}

bool same_decode(const EncodedColumn& col, const std::vector<int64_t>& v) {
  if (col.decode_all() != v) return false;
  for (size_t i = 0; i < v.size(); ++i)
    if (col.at(i) != v[i]) return false;
  return true;
}

// ---------------------------------------------------------------------------

Outcome lossless_fuzz() {
  Stopwatch sw;
  std::mt19937_64 rng(1001);
  constexpr int kSequences = 10000;
  size_t failures = 0, runs = 0, longest = 0;
  std::string first;
  for (int t = 0; t < kSequences; ++t) {
    // Log-uniform lengths over [1, 4096] weight short inputs and edge cases.
    const auto v = fuzz_values(rng, static_cast<size_t>(std::exp2(12.0 * static_cast<double>(rng() % 1000001) / 1e6)));
    longest = std::max(longest, v.size());
    const IntSequence seq(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const Regressor r = kFamilies[static_cast<size_t>(t) % kFamilies.size()];
    const uint64_t len = 1 + rng() % 2048;
    const double tau = static_cast<double>(rng() % 11) / 10;
    const std::vector<CodecConfig> codecs = {{Codec::leco_fix, r, len}, {Codec::leco_var, r, 0, tau}, {Codec::for_, Regressor::constant, len},
                                             {Codec::delta_fix, Regressor::step, len}, {Codec::delta_var, Regressor::step, 0, tau}};
    for (const auto& cfg : codecs) {
      ++runs;
      if (!same_decode(compress(seq, cfg), v)) {
        if (failures++ == 0) first = fmt("sequence %d codec %s", t, to_string(cfg.codec));
      }
    }
    ++runs;
    if (!same_decode(compress(IntSequence(sorted), {Codec::ef}), sorted) && failures++ == 0) first = fmt("sequence %d codec ef", t);
  }
  const double s = sw.seconds();
  Outcome o;
  o.pass = failures == 0 && s < 120;
  o.detail = fmt("%zu encode/decode runs over %d sequences (n up to %zu), %zu mismatches, %.1f s (limit 120 s)", runs, kSequences, longest,
                 failures, s);
  if (failures) o.detail += "; first: " + first;
  return o;
}

Outcome minimax_linear() {
  std::mt19937_64 rng(1002);
  size_t bad = 0;
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<int64_t> v(1 + rng() % 64);
    const int64_t slope = static_cast<int64_t>(rng() % 2001) - 1000;
    const uint64_t noise = uint64_t{1} << (rng() % 30);
    for (size_t i = 0; i < v.size(); ++i) v[i] = slope * static_cast<int64_t>(i) + static_cast<int64_t>(rng() % noise);
    if (t % 4 == 0) std::shuffle(v.begin(), v.end(), rng);
    const double got = fit_linear_minimax(v).max_abs_residual;
    const double want = static_cast<double>(oracle::linear_half_width(v).value());
    const double rel = std::abs(got - want) / std::max(1.0, want);
    worst = std::max(worst, rel);
    bad += rel > 1e-9;
  }
  const std::vector<int64_t> ex = {0, 3, 4, 9};
  const auto f = fit_linear_minimax(ex);
  const auto res = residuals(f.model, ex);
  const bool example = f.max_abs_residual == 1.0 && oracle::linear_half_width(ex).value() == 1.0L &&
                       res == std::vector<int64_t>{1, 1, -1, 1};
  return {bad == 0 && example, fmt("1000 sequences, %zu beyond 1e-9, worst relative gap %.3g; [0,3,4,9] half-width %.3g residuals %s", bad,
                                   worst, f.max_abs_residual, example ? "[1,1,-1,1]" : "differ")};
}

Outcome greedy_vs_dp() {
  Stopwatch sw;
  std::mt19937_64 rng(1003);
  const auto cost = cost_model_for(Regressor::linear);
  double worst = 0, greedy_total = 0, dp_total = 0;
  size_t over = 0;
  for (int t = 0; t < 200; ++t) {
    const auto v = piecewise_noisy(rng, 16 + rng() % 497);
    const double g = static_cast<double>(layout_size_bits(v, partition_variable(v, Regressor::linear, cost), Regressor::linear, cost));
    const double d = static_cast<double>(layout_size_bits(v, dp_optimal_partition(v, Regressor::linear, cost), Regressor::linear, cost));
    worst = std::max(worst, g / d);
    over += g > 1.03 * d;
    greedy_total += g;
    dp_total += d;
  }
  const double s = sw.seconds();
  return {over == 0 && s < 300, fmt("200 sequences, worst greedy/optimal %.4f (limit 1.03 each), %zu over, pooled %.4f, %.1f s", worst, over,
                                    greedy_total / dp_total, s)};
}

Outcome worked_examples() {
  const std::vector<int64_t> ef = {0, 3, 13, 16, 18, 19, 26, 29};
  const auto col = ef_encode(ef);
  const bool ef_ok = col.lower_bits_string() == "00 11 01 00 10 11 10 01" && col.upper_bits_string() == "110 0 0 10 1110 0 10 10";

  const std::vector<int64_t> seq = {30, 31, 32, 29, 49};
  const PartitionCostModel cost{32, 0.5};
  PartitionTrace trace;
  const auto layout = partition_variable(seq, Regressor::step, cost, &trace);
  const bool accepted = !trace.inclusions.empty() && trace.inclusions[0].position == 3 && trace.inclusions[0].cost == 6;
  const bool merged = trace.merges.size() == 1 && trace.merges[0].middle == 4 && trace.merges[0].merged_bits < trace.merges[0].separate_bits &&
                      layout.boundaries == std::vector<uint64_t>{0, 5};
  return {ef_ok && accepted && merged,
          fmt("elias-fano bits %s; inclusion of 29 cost %lld vs threshold %.0f %s; merge {30,31,32,29}+{49} %s", ef_ok ? "match" : "differ",
              accepted ? static_cast<long long>(trace.inclusions[0].cost) : -1LL, cost.tau * static_cast<double>(cost.model_size_bits),
              accepted ? "accepted" : "not accepted", merged ? "accepted" : "not accepted")};
}

Outcome for_dominance() {
  GenerateParams lp;
  lp.jitter = 100;
  const std::vector<std::pair<std::string, IntSequence>> data = {{"linear", generate(DatasetKind::linear, 1000000, 1005, lp)},
                                                                 {"normal", generate(DatasetKind::normal, 1000000, 1005)}};
  Outcome o;
  for (const auto& [name, seq] : data) {
    const uint64_t len = resolve_partition_size(seq, {Codec::leco_fix, Regressor::linear});
    const double leco = static_cast<double>(compress(seq, {Codec::leco_fix, Regressor::linear, len}).bytes().size()) / static_cast<double>(seq.raw_bytes());
    const double fr = static_cast<double>(compress(seq, {Codec::for_, Regressor::constant, len}).bytes().size()) / static_cast<double>(seq.raw_bytes());
    o.pass &= leco < fr;
    o.detail += fmt("%s L=%llu leco-fix %.4f vs for %.4f; ", name.c_str(), static_cast<unsigned long long>(len), leco, fr);
  }
  std::mt19937_64 rng(1006);
  size_t wider = 0;
  constexpr int kSlices = 5000;
  for (int t = 0; t < kSlices; ++t) {
    const auto v = fuzz_values(rng, 1 + rng() % 512);
    wider += max_residual_bits(v, Regressor::linear) > max_residual_bits(v, Regressor::constant);
  }
  o.pass &= wider == 0;
  o.detail += fmt("%d fuzzed partitions, %zu with linear width above constant", kSlices, wider);
  return o;
}

Outcome elias_fano_bound() {
  std::mt19937_64 rng(1007);
  Outcome o;
  double worst_margin = 1e9;
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    const size_t n = 10000 + rng() % 90000;
    std::vector<int64_t> v(n);
    const uint64_t gap = uint64_t{1} << (rng() % 36);
    int64_t x = static_cast<int64_t>(rng() % 1000000) - 500000;
    for (auto& e : v) e = x += static_cast<int64_t>(rng() % (gap + 1));
    const auto col = ef_encode(v);
    const double m = static_cast<double>(v.back() - v.front()) + 1;
    const double bound = 2 + std::max(0.0, std::ceil(std::log2(m / static_cast<double>(n)))) + 0.1;
    const double got = static_cast<double>(col.size_bits()) / static_cast<double>(n);
    worst_margin = std::min(worst_margin, bound - got);
    o.pass &= got <= bound;
    ++checked;
  }
  o.detail = fmt("%d sorted inputs with n in [1e4, 1e5], smallest slack under the bound %.4f bits/element", checked, worst_margin);
  return o;
}

Outcome range_decode() {
  std::mt19937_64 rng(1008);
  size_t bad = 0, with_corrections = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto v = fuzz_values(rng, 1 + rng() % 3000);
    EncodeOptions opt;
    opt.max_correction_fraction = static_cast<double>(rng() % 3) / 4;
    const auto col = encode_column(IntSequence(v), random_layout(rng, v.size()), kFamilies[static_cast<size_t>(t) % kFamilies.size()], opt);
    for (size_t j = 0; j < col.partition_count(); ++j) with_corrections += !col.partition(j).corrections.empty();
    const uint64_t lo = rng() % (v.size() + 1), hi = lo + rng() % (v.size() - lo + 1);
    const auto got = decode_range(col, lo, hi);
    bool ok = got.size() == hi - lo;
    for (uint64_t i = lo; ok && i < hi; ++i) ok = got[i - lo] == decode_at(col, i) && got[i - lo] == v[i];
    bad += !ok;
  }
  const uint64_t n = 1000000;
  std::vector<int64_t> drift(n);
  for (uint64_t i = 0; i < n; ++i) drift[i] = static_cast<int64_t>(std::floor(0.1 * static_cast<double>(i))) + static_cast<int64_t>(i % 3);
  EncodeOptions opt;
  opt.max_correction_fraction = 1.0;
  PartitionLayout one;
  one.scheme = Scheme::variable;
  one.boundaries = {0, n};
  const auto col = encode_column(IntSequence(drift), one, std::vector<RegressionModel>{RegressionModel::linear(0.0, 0.1)}, opt);
  const auto all = decode_all(col);
  bool drift_ok = all == drift;
  for (uint64_t i = 0; drift_ok && i < n; ++i) drift_ok = all[i] == decode_at(col, i);
  return {bad == 0 && drift_ok && col.partition(0).accumulate,
          fmt("1000 containers, %zu range mismatches, %zu partitions carried corrections; drift 0.1 over 1e6 values %s with %zu corrections",
              bad, with_corrections, drift_ok ? "exact" : "differs", col.partition(0).corrections.size())};
}

Outcome filter_pruning() {
  std::mt19937_64 rng(1009);
  size_t bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto v = fuzz_values(rng, 1 + rng() % 2000);
    const auto col = encode_column(IntSequence(v), random_layout(rng, v.size()), kFamilies[static_cast<size_t>(t) % kFamilies.size()]);
    const int64_t alpha = v[rng() % v.size()] + static_cast<int64_t>(rng() % 5) - 2;
    bad += filter_less_than(col, alpha).matches != oracle::brute_filter(v, alpha);
  }
  GenerateParams p;
  p.jitter = 200;
  const auto seq = generate(DatasetKind::linear, 1000000, 1010, p);
  const auto col = encode_column(seq, partition_fixed(seq.size(), 1024), Regressor::linear);
  const int64_t alpha = seq.values()[seq.size() / 10];
  const auto r = filter_less_than(col, alpha);
  const double touched = static_cast<double>(r.examined) / static_cast<double>(seq.size());
  const bool exact = r.matches == oracle::brute_filter(seq.values(), alpha);
  return {bad == 0 && exact && touched < 0.5,
          fmt("1000 containers, %zu bitmap mismatches; sorted linear 1e6 at 10%% selectivity decodes %.1f%% of positions", bad, 100 * touched)};
}

Outcome selector_quality() {
  std::ifstream in(std::string(LECO_SOURCE_DIR) + "/models/selector.json");
  if (!in) return {false, "models/selector.json not found"};
  const auto model = SelectorModel::from_json(nlohmann::json::parse(in));
  const auto held_out = synthetic_corpus(100, 31337);
  size_t close = 0;
  double worst = 0;
  for (const auto& s : held_out) {
    const IntSequence seq(s.values, 32);
    auto ratio = [&](Regressor r) {
      return static_cast<double>(encode_column(seq, partition_fixed(seq.size(), seq.size()), r).bytes().size()) / static_cast<double>(seq.raw_bytes());
    };
    double best = 1e9;
    for (Regressor r : selector_families()) best = std::min(best, ratio(r));
    const double gap = ratio(recommend_regressor(s.values, model)) - best;
    worst = std::max(worst, gap);
    close += gap <= 0.10;
  }
  const double share = static_cast<double>(close) / static_cast<double>(held_out.size());
  return {share >= 0.9, fmt("%zu held-out sequences, %.1f%% within 0.10 of the best family's ratio (need 90%%), worst gap %.3f",
                            held_out.size(), 100 * share, worst)};
}

Outcome access_ordering() {
  GenerateParams p;
  p.jitter = 100;
  const auto seq = generate(DatasetKind::linear, 1000000, 1011, p);
  const auto fix = compress(seq, {Codec::leco_fix, Regressor::linear, 1024});
  const auto var = compress(seq, {Codec::leco_var, Regressor::linear});
  const auto delta = compress(seq, {Codec::delta_fix, Regressor::step, 1024});
  double a = 0, b = 0, c = 0;
  for (uint64_t r = 0; r < 3; ++r) {
    a += random_access_ns(fix, seq.size(), 77 + r, 5);
    b += random_access_ns(var, seq.size(), 77 + r, 5);
    c += random_access_ns(delta, seq.size(), 77 + r, 5);
  }
  return {c >= 5 * a, fmt("leco-fix %.1f ns, leco-var %.1f ns (%s leco-fix, not gating), delta-fix %.1f ns = %.1fx leco-fix (need 5x)", a / 3,
                          b / 3, b > a ? "above" : "not above", c / 3, c / a)};
}

Outcome strings() {
  std::mt19937_64 rng(1012);
  size_t roundtrip_bad = 0, order_bad = 0, padding_bad = 0, strings_checked = 0;
  for (int t = 0; t < 300; ++t) {
    auto corpus = lowercase_corpus(rng, 1 + rng() % 500);
    StringEncodeOptions opt;
    opt.partition_size = t % 3 == 0 ? 0 : 1 + rng() % 200;
    const auto col = StringColumn::encode(corpus, opt);
    roundtrip_bad += col.decode_all() != corpus;
    roundtrip_bad += StringColumn::from_bytes(col.bytes()).decode_all() != corpus;

    std::sort(corpus.begin(), corpus.end());
    const auto h = build_string_header(corpus);
    for (size_t i = 1; i < corpus.size(); ++i) order_bad += map_string_to_int(corpus[i - 1], h) > map_string_to_int(corpus[i], h);

    const uint64_t top = map_string_to_int(corpus.back(), h, Padding::max) + 16;
    for (const auto& s : corpus) {
      const int64_t pred = static_cast<int64_t>(rng() % top) - 8;
      auto gap = [&](uint64_t x) { return std::abs(static_cast<long double>(x) - static_cast<long double>(pred)); };
      const uint64_t a = adaptive_padding(s, h, pred);
      padding_bad += gap(a) > std::min(gap(map_string_to_int(s, h, Padding::min)), gap(map_string_to_int(s, h, Padding::max)));
      ++strings_checked;
    }
  }
  return {roundtrip_bad + order_bad + padding_bad == 0,
          fmt("300 corpora: %zu roundtrip failures, %zu order inversions, %zu of %zu strings with adaptive padding worse than min/max",
              roundtrip_bad, order_bad, padding_bad, strings_checked)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"lossless-fuzz", lossless_fuzz},       {"minimax-linear", minimax_linear},   {"greedy-vs-optimal", greedy_vs_dp},
      {"worked-examples", worked_examples},   {"beats-for", for_dominance},         {"elias-fano-bound", elias_fano_bound},
      {"range-decode", range_decode},         {"filter-pruning", filter_pruning},   {"selector-quality", selector_quality},
      {"random-access-order", access_ordering}, {"strings", strings}};
  int failed = 0;
  for (const auto& [name, run] : checks) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
