#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "leco/leco.hpp"

using namespace leco;

namespace {

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / ("leco_test_" + name)).string(); }

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

BenchOptions quick() {
  BenchOptions o;
  o.repetitions = 1;
  o.accesses = 1000;
  return o;
}

}  // namespace

TEST(Generate, Examples) {
  GenerateParams p;
  p.start = 10;
  p.step = 7;
  const auto lin = generate(DatasetKind::linear, 1000, 1, p).vector();
  for (size_t i = 0; i < lin.size(); ++i) EXPECT_EQ(lin[i], 10 + 7 * static_cast<int64_t>(i));
  const auto poi = generate(DatasetKind::poisson, 5000, 2).vector();
  for (size_t i = 1; i < poi.size(); ++i) EXPECT_LT(poi[i - 1], poi[i]);
  const auto nor = generate(DatasetKind::normal, 1000, 3).vector();
  EXPECT_TRUE(std::is_sorted(nor.begin(), nor.end()));
  EXPECT_EQ(generate(DatasetKind::normal, 1000, 3).vector(), nor);
  EXPECT_THROW(generate(DatasetKind::linear, 0, 1), error);
  EXPECT_THROW(parse_dataset_kind("zipf"), error);
}

TEST(LoadDataset, Binary) {
  const auto path = temp_path("bin64");
  std::vector<uint8_t> bytes = {3, 0, 0, 0, 0, 0, 0, 0};
  for (uint8_t x : {1, 2, 3})
    for (int k = 0; k < 8; ++k) bytes.push_back(k == 0 ? x : 0);
  write_bytes(path, bytes);
  EXPECT_EQ(load_dataset(path, FileFormat::bin64).vector(), (std::vector<int64_t>{1, 2, 3}));
  bytes.pop_back();
  write_bytes(path, bytes);
  EXPECT_THROW(load_dataset(path, FileFormat::bin64), error);
  std::filesystem::remove(path);
}

TEST(LoadDataset, EmptyFileIsAnError) {
  const auto path = temp_path("empty");
  write_bytes(path, {});
  for (FileFormat f : {FileFormat::bin32, FileFormat::bin64, FileFormat::text}) EXPECT_THROW(load_dataset(path, f), error);
  std::filesystem::remove(path);
}

TEST(LoadDataset, Text) {
  const auto path = temp_path("text");
  std::ofstream(path) << "5\n-2\n";
  EXPECT_EQ(load_dataset(path, FileFormat::text).vector(), (std::vector<int64_t>{5, -2}));
  std::ofstream(path) << "5\nfive\n";
  try {
    load_dataset(path, FileFormat::text);
    FAIL() << "expected a parse error";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::parse_error);
  }
  std::filesystem::remove(path);
}

TEST(LoadDataset, SaveRoundtrip) {
  const auto seq = generate(DatasetKind::normal, 500, 4);
  for (FileFormat f : {FileFormat::bin64, FileFormat::text}) {
    const auto path = temp_path("save");
    save_dataset(path, seq, f);
    EXPECT_EQ(load_dataset(path, f).vector(), seq.vector());
    std::filesystem::remove(path);
  }
}

TEST(RunBench, CsvHeader) {
  std::ostringstream os;
  write_csv(os, {});
  EXPECT_EQ(os.str(), "dataset,codec,config,ratio,model_bytes,delta_bytes,ra_ns,decomp_gbps,comp_gbps,seed\n");
}

TEST(RunBench, LecoBeatsForOnCleanLine) {
  GenerateParams p;
  p.jitter = 20;
  const std::vector<NamedDataset> ds = {{"linear", generate(DatasetKind::linear, 50000, 5, p)}};
  const auto recs = run_bench(ds, {{Codec::leco_fix, Regressor::linear, 1024}, {Codec::for_, Regressor::constant, 1024}}, quick());
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_LT(recs[0].ratio, recs[1].ratio);
  for (const auto& r : recs) {
    EXPECT_EQ(r.model_bytes + r.delta_bytes, static_cast<uint64_t>(std::llround(r.ratio * 50000 * 8)));
    EXPECT_GT(r.ra_ns, 0);
  }
}

TEST(RunBench, ContentIsReproducible) {
  const std::vector<NamedDataset> ds = {{"poisson", generate(DatasetKind::poisson, 20000, 6)}};
  std::vector<CodecConfig> codecs;
  for (Codec c : {Codec::leco_fix, Codec::leco_var, Codec::for_, Codec::delta_fix, Codec::delta_var, Codec::ef}) codecs.push_back({c});
  const auto a = run_bench(ds, codecs, quick());
  const auto b = run_bench(ds, codecs, quick());
  ASSERT_EQ(a.size(), codecs.size());
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].ratio, b[k].ratio) << a[k].codec;
    EXPECT_EQ(a[k].model_bytes, b[k].model_bytes);
    EXPECT_EQ(a[k].config, b[k].config);
  }
  for (const auto& cfg : codecs) EXPECT_EQ(compress(ds[0].values, cfg).bytes(), compress(ds[0].values, cfg).bytes());
  const auto j = to_json(a);
  EXPECT_EQ(j["records"].size(), a.size());
  EXPECT_TRUE(j.contains("timestamp"));
}

TEST(RunBench, MismatchNamesFirstDifference) {
  const IntSequence seq({1, 2, 3, 4});
  const auto col = compress(IntSequence({1, 2, 9, 4}), {Codec::for_});
  try {
    detail::verify_roundtrip(seq, col, "demo");
    FAIL() << "expected a mismatch";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::roundtrip_mismatch);
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos) << e.what();
  }
}

TEST(EncodedColumn, DetectsContainer) {
  const auto seq = generate(DatasetKind::linear, 3000, 7);
  for (Codec c : {Codec::leco_fix, Codec::for_, Codec::ef}) {
    const auto col = compress(seq, {c});
    const auto back = EncodedColumn::from_bytes(col.bytes());
    EXPECT_EQ(back.decode_all(), seq.vector()) << to_string(c);
  }
  EXPECT_THROW(EncodedColumn::from_bytes({'N', 'O', 'P', 'E', 0}), error);
}
