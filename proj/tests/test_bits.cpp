#include <gtest/gtest.h>

#include <random>

#include "leco/bits.hpp"

using namespace leco;

TEST(PackBits, Examples) {
  const std::vector<uint64_t> v = {1, 2, 3};
  EXPECT_EQ(pack_bits(v, 2), std::vector<uint8_t>{0x39});
  const std::vector<uint64_t> zeros = {0, 0, 0};
  EXPECT_TRUE(pack_bits(zeros, 0).empty());
  EXPECT_EQ(unpack_bits({}, 0, 3), zeros);
}

TEST(PackBits, RejectsWideValues) { EXPECT_THROW(pack_bits(std::vector<uint64_t>{4}, 2), error); }

TEST(PackBits, Roundtrip) {
  std::mt19937_64 rng(3);
  for (unsigned w = 0; w <= 64; ++w) {
    std::vector<uint64_t> v(1 + rng() % 300);
    for (auto& x : v) x = rng() & low_mask(w);
    const auto bytes = pack_bits(v, w);
    EXPECT_EQ(bytes.size(), packed_bytes(v.size(), w));
    EXPECT_EQ(unpack_bits(bytes, w, v.size()), v) << "width " << w;
    for (size_t i = 0; i < v.size(); ++i) EXPECT_EQ(read_bits(bytes, i * w, w), v[i]);
  }
}

TEST(Zigzag, Examples) {
  EXPECT_EQ(zigzag_encode(0), 0u);
  EXPECT_EQ(zigzag_encode(-1), 1u);
  EXPECT_EQ(zigzag_encode(1), 2u);
  EXPECT_EQ(zigzag_encode(-2), 3u);
  for (int64_t v : {INT64_MIN, INT64_MAX, int64_t{-12345}, int64_t{777}}) EXPECT_EQ(zigzag_decode(zigzag_encode(v)), v);
}

TEST(OffsetBinary, Window) {
  for (unsigned phi = 1; phi < 64; ++phi) {
    const int64_t lo = -(int64_t{1} << (phi - 1)), hi = (int64_t{1} << (phi - 1)) - 1;
    EXPECT_EQ(to_offset_binary(lo, phi), 0u);
    EXPECT_EQ(to_offset_binary(hi, phi), low_mask(phi));
    EXPECT_EQ(from_offset_binary(to_offset_binary(lo, phi), phi), lo);
    EXPECT_EQ(from_offset_binary(to_offset_binary(hi, phi), phi), hi);
  }
  EXPECT_EQ(from_offset_binary(to_offset_binary(INT64_MIN, 64), 64), INT64_MIN);
}

TEST(ByteReader, RejectsTruncation) {
  const std::vector<uint8_t> b = {1, 2, 3};
  ByteReader r(b);
  EXPECT_EQ(r.u16(), 0x0201);
  EXPECT_THROW(r.u32(), error);
}
