#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "leco/baselines.hpp"
#include "leco/codec.hpp"
#include "leco/datasets.hpp"
#include "leco/error.hpp"
#include "leco/partitioner.hpp"

namespace leco {

enum class Codec : uint8_t { leco_fix, leco_var, for_, delta_fix, delta_var, ef };

inline const char* to_string(Codec c) {
  switch (c) {
    case Codec::leco_fix: return "leco-fix";
    case Codec::leco_var: return "leco-var";
    case Codec::for_: return "for";
    case Codec::delta_fix: return "delta-fix";
    case Codec::delta_var: return "delta-var";
    case Codec::ef: return "ef";
  }
  return "?";
}

inline Codec parse_codec(std::string_view name) {
  for (Codec c : {Codec::leco_fix, Codec::leco_var, Codec::for_, Codec::delta_fix, Codec::delta_var, Codec::ef})
    if (name == to_string(c)) return c;
  fail(errc::invalid_argument, "unknown codec '" + std::string(name) + "'");
}

struct CodecConfig {
  Codec codec = Codec::leco_fix;
  FamilySpec family = Regressor::linear;
  uint64_t partition_size = 0;  // fixed-length codecs; 0 searches (LECO) or uses 1024
  double tau = 0.1;
  uint64_t seed = 42;

  std::string describe() const {
    std::ostringstream s;
    switch (codec) {
      case Codec::leco_fix: s << "family=" << family.name() << ";L=" << partition_size; break;
      case Codec::leco_var: s << "family=" << family.name() << ";tau=" << tau; break;
      case Codec::for_:
      case Codec::delta_fix: s << "L=" << partition_size; break;
      case Codec::delta_var: s << "tau=" << tau; break;
      case Codec::ef: s << "-"; break;
    }
    return s.str();
  }
};

inline constexpr uint64_t kDefaultFrameLength = 1024;

/// A compressed column of any codec.
class EncodedColumn {
 public:
  using Storage = std::variant<CompressedColumn, ForColumn, EliasFanoColumn>;

  explicit EncodedColumn(Storage s) : s_(std::move(s)) {}

  /// Detects the container by its magic.
  static EncodedColumn from_bytes(std::vector<uint8_t> bytes) {
    if (bytes.size() < 4) fail(errc::format_error, "container too short");
    const std::string magic(bytes.begin(), bytes.begin() + 4);
    if (magic == "LECO") return EncodedColumn(CompressedColumn::from_bytes(std::move(bytes)));
    if (magic == "LFOR") return EncodedColumn(ForColumn::from_bytes(std::move(bytes)));
    if (magic == "LEF1") return EncodedColumn(EliasFanoColumn::from_bytes(std::move(bytes)));
    fail(errc::format_error, "unknown container magic");
  }

  uint64_t size() const {
    return std::visit([](const auto& c) { return c.size(); }, s_);
  }
  const std::vector<uint8_t>& bytes() const {
    return std::visit([](const auto& c) -> const std::vector<uint8_t>& { return c.bytes(); }, s_);
  }
  int64_t at(uint64_t i) const {
    return std::visit([i](const auto& c) { return c.at(i); }, s_);
  }
  std::vector<int64_t> decode_all() const {
    return std::visit(
        [](const auto& c) {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, CompressedColumn>) return leco::decode_all(c);
          else return c.decode_all();
        },
        s_);
  }
  /// Metadata bytes (headers, tables, models) versus per-value payload bytes.
  std::pair<uint64_t, uint64_t> model_delta_bytes() const {
    return std::visit(
        [](const auto& c) -> std::pair<uint64_t, uint64_t> {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, CompressedColumn>) {
            const auto b = c.breakdown();
            return {b.model_bytes, b.delta_bytes};
          } else if constexpr (std::is_same_v<T, ForColumn>) {
            return {c.model_bytes(), c.bytes().size() - c.model_bytes()};
          } else {
            return {EliasFanoColumn::kHeaderBytes, c.bytes().size() - EliasFanoColumn::kHeaderBytes};
          }
        },
        s_);
  }
  const Storage& storage() const noexcept { return s_; }

 private:
  Storage s_;
};

/// Partition length a fixed-length codec will use.
inline uint64_t resolve_partition_size(const IntSequence& seq, const CodecConfig& cfg) {
  if (cfg.partition_size > 0) return std::min<uint64_t>(cfg.partition_size, seq.size());
  if (cfg.codec == Codec::leco_fix) {
    FixedSearchOptions opt;
    opt.seed = cfg.seed;
    return search_fixed_length(seq.values(), cfg.family, opt);
  }
  return std::min<uint64_t>(kDefaultFrameLength, seq.size());
}

inline EncodedColumn compress(const IntSequence& seq, const CodecConfig& cfg) {
  switch (cfg.codec) {
    case Codec::leco_fix:
      return EncodedColumn(encode_column(seq, partition_fixed(seq.size(), resolve_partition_size(seq, cfg)), cfg.family));
    case Codec::leco_var:
      return EncodedColumn(encode_column(
          seq, partition_variable(seq.values(), cfg.family, cost_model_for(cfg.family, Scheme::variable, cfg.tau)), cfg.family));
    case Codec::for_: return EncodedColumn(ForColumn::encode(seq, resolve_partition_size(seq, cfg)));
    case Codec::delta_fix: return EncodedColumn(delta_encode_fixed(seq, resolve_partition_size(seq, cfg)));
    case Codec::delta_var: return EncodedColumn(delta_encode_variable(seq, cfg.tau));
    case Codec::ef: return EncodedColumn(EliasFanoColumn::encode(seq.values()));
  }
  fail(errc::invalid_argument, "unknown codec");
}

struct BenchRecord {
  std::string dataset;
  std::string codec;
  std::string config;
  double ratio = 0;
  uint64_t model_bytes = 0;
  uint64_t delta_bytes = 0;
  double ra_ns = 0;
  double decomp_gbps = 0;
  double comp_gbps = 0;
  uint64_t seed = 0;
};

struct BenchOptions {
  int repetitions = 3;
  uint64_t accesses = 0;       // 0 means one per value
  double access_budget_s = 5;  // per repetition; 0 disables the cap
  uint64_t seed = 42;
};

struct NamedDataset {
  std::string name;
  IntSequence values;
};

namespace detail {

inline void verify_roundtrip(const IntSequence& seq, const EncodedColumn& col, const std::string& label) {
  const auto back = col.decode_all();
  const auto v = seq.values();
  if (back.size() != v.size())
    fail(errc::roundtrip_mismatch, label + ": decoded " + std::to_string(back.size()) + " values, expected " + std::to_string(v.size()));
  for (size_t i = 0; i < v.size(); ++i)
    if (back[i] != v[i])
      fail(errc::roundtrip_mismatch, label + ": first difference at index " + std::to_string(i) + ": expected " + std::to_string(v[i]) +
                                         ", decoded " + std::to_string(back[i]));
  if (col.at(0) != v[0] || col.at(v.size() - 1) != v.back()) fail(errc::roundtrip_mismatch, label + ": point access disagrees");
}

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Mean random-access latency over up to `count` uniformly drawn positions.
/// Stops early, in batches, once `budget_s` seconds have been spent.
inline double random_access_ns(const EncodedColumn& col, uint64_t count, uint64_t seed, double budget_s = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint64_t> pick(0, col.size() - 1);
  constexpr uint64_t kBatch = 4096;
  std::vector<uint64_t> idx;
  volatile int64_t sink = 0;
  double spent = 0;
  uint64_t done = 0;
  while (done < count && (budget_s <= 0 || spent < budget_s)) {
    idx.resize(std::min(kBatch, count - done));
    for (auto& i : idx) i = pick(rng);
    spent += detail::seconds([&] {
      int64_t acc = 0;
      for (uint64_t i : idx) acc += col.at(i);
      sink = acc;
    });
    done += idx.size();
  }
  (void)sink;
  return spent * 1e9 / static_cast<double>(done);
}

/// Compress, verify the roundtrip (untimed), then time compression, random
/// access and full decompression, averaged over the repetitions.
inline std::vector<BenchRecord> run_bench(const std::vector<NamedDataset>& datasets, const std::vector<CodecConfig>& codecs,
                                          const BenchOptions& opt = {}) {
  std::vector<BenchRecord> out;
  for (const auto& ds : datasets) {
    const double raw = static_cast<double>(ds.values.raw_bytes());
    for (CodecConfig cfg : codecs) {
      if (cfg.codec != Codec::leco_var && cfg.codec != Codec::delta_var && cfg.codec != Codec::ef)
        cfg.partition_size = resolve_partition_size(ds.values, cfg);
      const std::string label = ds.name + "/" + to_string(cfg.codec);
      std::optional<EncodedColumn> col;
      double comp = 0, ra = 0, decomp = 0;
      const int reps = std::max(1, opt.repetitions);
      for (int r = 0; r < reps; ++r) {
        comp += detail::seconds([&] { col.emplace(compress(ds.values, cfg)); });
        if (r == 0) detail::verify_roundtrip(ds.values, *col, label);
        const uint64_t n_access = opt.accesses ? opt.accesses : ds.values.size();
        ra += random_access_ns(*col, n_access, opt.seed + static_cast<uint64_t>(r), opt.access_budget_s);
        volatile size_t sink = 0;
        decomp += detail::seconds([&] { sink = col->decode_all().size(); });
        (void)sink;
      }
      BenchRecord rec;
      rec.dataset = ds.name;
      rec.codec = to_string(cfg.codec);
      rec.config = cfg.describe();
      rec.ratio = static_cast<double>(col->bytes().size()) / raw;
      std::tie(rec.model_bytes, rec.delta_bytes) = col->model_delta_bytes();
      rec.ra_ns = ra / reps;
      rec.comp_gbps = raw * reps / comp / 1e9;
      rec.decomp_gbps = raw * reps / decomp / 1e9;
      rec.seed = opt.seed;
      out.push_back(rec);
    }
  }
  return out;
}

inline constexpr const char* kCsvHeader = "dataset,codec,config,ratio,model_bytes,delta_bytes,ra_ns,decomp_gbps,comp_gbps,seed";

inline void write_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.dataset << ',' << r.codec << ',' << r.config << ',' << std::setprecision(6) << r.ratio << ',' << r.model_bytes << ','
       << r.delta_bytes << ',' << std::setprecision(4) << r.ra_ns << ',' << r.decomp_gbps << ',' << r.comp_gbps << ',' << r.seed << '\n';
  }
}

inline nlohmann::json to_json(const std::vector<BenchRecord>& records) {
  nlohmann::json j;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["timestamp"] = stamp;
  j["records"] = nlohmann::json::array();
  for (const auto& r : records)
    j["records"].push_back({{"dataset", r.dataset},
                            {"codec", r.codec},
                            {"config", r.config},
                            {"ratio", r.ratio},
                            {"model_bytes", r.model_bytes},
                            {"delta_bytes", r.delta_bytes},
                            {"ra_ns", r.ra_ns},
                            {"decomp_gbps", r.decomp_gbps},
                            {"comp_gbps", r.comp_gbps},
                            {"seed", r.seed}});
  return j;
}

}  // namespace leco
