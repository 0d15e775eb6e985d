// Compresses a generated column with each codec and queries it.
#include <iostream>

#include "leco/leco.hpp"

int main() {
  leco::GenerateParams p;
  p.jitter = 50;
  const auto seq = leco::generate(leco::DatasetKind::linear, 100000, 1, p);

  for (auto codec : {leco::Codec::for_, leco::Codec::leco_fix, leco::Codec::leco_var, leco::Codec::ef}) {
    leco::CodecConfig cfg;
    cfg.codec = codec;
    cfg.partition_size = codec == leco::Codec::leco_var || codec == leco::Codec::ef ? 0 : 1024;
    const auto col = leco::compress(seq, cfg);
    std::cout << leco::to_string(codec) << ": " << col.bytes().size() << " bytes, value[12345] = " << col.at(12345) << '\n';
  }

  // Direct use of the learned codec: fixed partitions, linear models.
  const auto col = leco::encode_column(seq, leco::partition_fixed(seq.size(), 1024), leco::Regressor::linear);
  const auto b = col.breakdown();
  std::cout << "partitions " << col.partition_count() << ", model bytes " << b.model_bytes << ", delta bytes " << b.delta_bytes
            << '\n';

  const auto hits = leco::filter_less_than(col, 500000);
  std::cout << "values below 500000 found after examining " << hits.examined << " of " << col.size() << " positions\n";
  return 0;
}
