#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "leco/leco.hpp"

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) leco::fail(leco::errc::invalid_argument, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) leco::fail(leco::errc::invalid_argument, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

leco::SelectorModel load_selector(const std::string& path) {
  std::ifstream in(path);
  if (!in) leco::fail(leco::errc::invalid_argument, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    leco::fail(leco::errc::parse_error, path + ": " + e.what());
  }
  return leco::SelectorModel::from_json(j);
}

struct CodecFlags {
  std::string codec = "leco-fix";
  std::string family = "linear";
  uint64_t partition_size = 0;
  double tau = 0.1;
  uint64_t seed = 42;

  leco::CodecConfig config() const {
    leco::CodecConfig c;
    c.codec = leco::parse_codec(codec);
    c.family = leco::parse_regressor(family);
    c.partition_size = partition_size;
    c.tau = tau;
    c.seed = seed;
    return c;
  }
};

const std::vector<std::string> kCodecNames = {"leco-fix", "leco-var", "for", "delta-fix", "delta-var", "ef"};
const std::vector<std::string> kFormats = {"bin32", "bin64", "text"};

void add_codec_flags(CLI::App* cmd, CodecFlags& f) {
  cmd->add_option("--codec", f.codec, "Codec")->check(CLI::IsMember(kCodecNames))->capture_default_str();
  cmd->add_option("--family", f.family, "Regressor family (constant, linear, poly2, poly3, step, exp, log)")->capture_default_str();
  cmd->add_option("--partition-size", f.partition_size, "Partition length for fixed schemes (0 searches)")->capture_default_str();
  cmd->add_option("--tau", f.tau, "Split aggressiveness for variable schemes")->capture_default_str();
  cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned compression for integer columns"};
  app.require_subcommand(1);

  std::string format = "bin64";
  auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "Dataset file format")->check(CLI::IsMember(kFormats))->capture_default_str();
  };

  // compress
  auto* compress = app.add_subcommand("compress", "Compress a dataset file");
  std::string in_path, out_path;
  CodecFlags cflags;
  compress->add_option("input", in_path, "Dataset file")->required();
  compress->add_option("-o,--output", out_path, "Compressed file")->required();
  add_codec_flags(compress, cflags);
  add_format(compress);

  // decompress
  auto* decompress = app.add_subcommand("decompress", "Decode a compressed file into a dataset file");
  decompress->add_option("input", in_path, "Compressed file")->required();
  decompress->add_option("-o,--output", out_path, "Dataset file")->required();
  add_format(decompress);

  // access
  auto* access = app.add_subcommand("access", "Print values at positions of a compressed file");
  std::vector<uint64_t> positions;
  access->add_option("input", in_path, "Compressed file")->required();
  access->add_option("positions", positions, "Positions")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Measure ratio and speed of codecs");
  std::vector<std::string> bench_inputs;
  std::vector<std::string> bench_kinds;
  std::vector<std::string> bench_codecs;
  uint64_t bench_n = 1000000;
  std::string out_kind = "csv";
  std::string report_path;
  CodecFlags bflags;
  int reps = 3;
  double access_budget = 5;
  bench->add_option("--input", bench_inputs, "Dataset files");
  bench->add_option("--generate", bench_kinds, "Generated datasets (linear, normal, poisson)");
  bench->add_option("-n", bench_n, "Length of generated datasets")->capture_default_str();
  bench->add_option("--codec", bench_codecs, "Codecs (default: all)")->check(CLI::IsMember(kCodecNames));
  bench->add_option("--family", bflags.family, "Regressor family for LECO codecs")->capture_default_str();
  bench->add_option("--partition-size", bflags.partition_size, "Partition length for fixed schemes (0 searches)")->capture_default_str();
  bench->add_option("--tau", bflags.tau, "Split aggressiveness for variable schemes")->capture_default_str();
  bench->add_option("--seed", bflags.seed, "RNG seed")->capture_default_str();
  bench->add_option("--repetitions", reps, "Repetitions averaged per measurement")->capture_default_str();
  bench->add_option("--access-budget", access_budget, "Seconds of random access per repetition (0: no cap)")->capture_default_str();
  bench->add_option("--out", out_kind, "Report format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  bench->add_option("--report", report_path, "Report file (default: stdout)");
  add_format(bench);

  // advise
  auto* advise = app.add_subcommand("advise", "Recommend a regressor family and partitioning scheme");
  std::string selector_path = "models/selector.json";
  advise->add_option("input", in_path, "Dataset file")->required();
  advise->add_option("--selector", selector_path, "Selector model")->capture_default_str();
  add_format(advise);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  std::string kind = "linear";
  uint64_t gen_n = 1000000, gen_seed = 42;
  leco::GenerateParams params;
  gen->add_option("kind", kind, "linear, normal or poisson")->required();
  gen->add_option("-o,--output", out_path, "Dataset file")->required();
  gen->add_option("-n", gen_n, "Number of values")->capture_default_str();
  gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  gen->add_option("--step", params.step, "Linear step")->capture_default_str();
  gen->add_option("--jitter", params.jitter, "Linear jitter bound")->capture_default_str();
  gen->add_option("--mean", params.mean, "Normal mean")->capture_default_str();
  gen->add_option("--stddev", params.stddev, "Normal standard deviation")->capture_default_str();
  gen->add_option("--rate", params.rate, "Poisson arrival rate")->capture_default_str();
  add_format(gen);

  // train-selector
  auto* train = app.add_subcommand("train-selector", "Train the regressor selector on a synthetic corpus");
  size_t per_family = 300;
  uint64_t train_seed = 2024;
  train->add_option("-o,--output", out_path, "Selector model file")->required();
  train->add_option("--per-family", per_family, "Training sequences per family")->capture_default_str();
  train->add_option("--seed", train_seed, "RNG seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto fmt = leco::parse_file_format(format);
    if (*compress) {
      const auto seq = leco::load_dataset(in_path, fmt);
      const auto col = leco::compress(seq, cflags.config());
      write_file(out_path, col.bytes());
      std::cout << seq.size() << " values, " << col.bytes().size() << " bytes, ratio "
                << static_cast<double>(col.bytes().size()) / static_cast<double>(seq.raw_bytes()) << '\n';
    } else if (*decompress) {
      const auto col = leco::EncodedColumn::from_bytes(read_file(in_path));
      const auto values = col.decode_all();
      leco::save_dataset(out_path, leco::IntSequence(values, fmt == leco::FileFormat::bin32 ? 32 : 64), fmt);
    } else if (*access) {
      const auto col = leco::EncodedColumn::from_bytes(read_file(in_path));
      for (uint64_t i : positions) std::cout << col.at(i) << '\n';
    } else if (*bench) {
      std::vector<leco::NamedDataset> datasets;
      for (const auto& p : bench_inputs) datasets.push_back({p, leco::load_dataset(p, fmt)});
      for (const auto& k : bench_kinds)
        datasets.push_back({k, leco::generate(leco::parse_dataset_kind(k), bench_n, bflags.seed)});
      if (datasets.empty()) leco::fail(leco::errc::invalid_argument, "bench needs --input or --generate");
      if (bench_codecs.empty()) bench_codecs = kCodecNames;
      std::vector<leco::CodecConfig> configs;
      for (const auto& c : bench_codecs) {
        CodecFlags f = bflags;
        f.codec = c;
        configs.push_back(f.config());
      }
      leco::BenchOptions opt;
      opt.repetitions = reps;
      opt.access_budget_s = access_budget;
      opt.seed = bflags.seed;
      const auto records = leco::run_bench(datasets, configs, opt);
      std::ofstream file;
      if (!report_path.empty()) {
        file.open(report_path);
        if (!file) leco::fail(leco::errc::invalid_argument, "cannot write " + report_path);
      }
      std::ostream& os = report_path.empty() ? std::cout : file;
      if (out_kind == "csv") leco::write_csv(os, records);
      else os << leco::to_json(records).dump(2) << '\n';
    } else if (*advise) {
      const auto seq = leco::load_dataset(in_path, fmt);
      const auto selector = load_selector(selector_path);
      const auto features = leco::extract_features(seq.values(), selector.features);
      const auto arr = features.as_array();
      nlohmann::json j;
      for (size_t k = 0; k < leco::kFeatureCount; ++k) j["features"][leco::kFeatureNames[k]] = arr[k];
      j["family"] = leco::to_string(selector.predict(features));
      if (seq.size() >= 16) {
        const auto h = leco::hardness_scores(seq.values());
        const auto& t = leco::reference_thresholds();
        j["hardness"] = {{"local", h.local}, {"global", h.global}};
        j["thresholds"] = {{"local", t.local}, {"global", t.global}};
        j["scheme"] = leco::advise_partitioning(h, t) == leco::Scheme::variable ? "variable" : "fixed";
      }
      std::cout << j.dump(2) << '\n';
    } else if (*gen) {
      const auto seq = leco::generate(leco::parse_dataset_kind(kind), gen_n, gen_seed, params);
      leco::save_dataset(out_path, seq, fmt);
    } else if (*train) {
      const auto corpus = leco::synthetic_corpus(per_family, train_seed);
      const auto model = leco::train_selector(corpus);
      std::ofstream out(out_path);
      if (!out) leco::fail(leco::errc::invalid_argument, "cannot write " + out_path);
      out << model.to_json().dump(1) << '\n';
      std::cout << "trained on " << corpus.size() << " sequences, depth " << model.tree.depth() << ", "
                << model.tree.nodes.size() << " nodes\n";
    }
  } catch (const leco::error& e) {
    std::cerr << "leco: " << e.what() << '\n';
    return e.code() == leco::errc::roundtrip_mismatch ? 3 : 1;
  }
  return 0;
}
