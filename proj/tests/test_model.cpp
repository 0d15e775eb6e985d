#include <gtest/gtest.h>

#include <random>

#include "leco/leco.hpp"
#include "support/oracles.hpp"

using namespace leco;

TEST(IntSequence, RejectsEmptyAndOutOfWidth) {
  EXPECT_THROW(IntSequence(std::vector<int64_t>{}), error);
  EXPECT_THROW(IntSequence({int64_t{1} << 40}, 32), error);
  EXPECT_THROW(IntSequence({1}, 16), error);
  const IntSequence s({1, -2, 3}, 32);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.raw_bytes(), 12u);
}

TEST(Evaluate, Examples) {
  EXPECT_DOUBLE_EQ(evaluate(RegressionModel::constant(5), 17), 5.0);
  EXPECT_DOUBLE_EQ(evaluate(RegressionModel::linear(-1, 3), 2), 5.0);
  EXPECT_DOUBLE_EQ(evaluate(RegressionModel::polynomial({1, 0, 2}), 3), 19.0);
}

TEST(Evaluate, StepNeedsContext) {
  try {
    evaluate(RegressionModel::step(4), 1);
    FAIL() << "step evaluation must throw";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::context_required);
  }
}

TEST(Evaluate, RejectsNonFiniteCoefficients) {
  EXPECT_THROW(RegressionModel::linear(std::nan(""), 1).validate(), error);
  EXPECT_THROW(RegressionModel::polynomial({1, 2, 3, 4, 5}).validate(), error);
}

TEST(Residual, Examples) {
  const std::vector<int64_t> seq = {0, 3, 4, 9};
  EXPECT_EQ(residual(RegressionModel::linear(-1, 3), seq, 0), 1);
  const std::vector<int64_t> fives = {5, 5, 5};
  EXPECT_EQ(residual(RegressionModel::constant(5), fives, 1), 0);
  const std::vector<int64_t> one = {1};
  EXPECT_EQ(residual(RegressionModel::linear(0.5, 1), one, 0), 1);
}

TEST(Residual, FloorsNegativePredictions) {
  const std::vector<int64_t> seq = {-3};
  // floor(-2.5) = -3, so the residual is 0.
  EXPECT_EQ(residual(RegressionModel::constant(-2.5), seq, 0), 0);
}

TEST(Residual, ReconstructsEveryValue) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int64_t> val(-1000000, 1000000);
  std::uniform_real_distribution<double> coef(-100, 100);
  for (int t = 0; t < 200; ++t) {
    std::vector<int64_t> seq(50);
    for (auto& v : seq) v = val(rng);
    const auto m = RegressionModel::polynomial({coef(rng), coef(rng), coef(rng) / 10});
    for (size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(predict_floor(m, i) + residual(m, seq, i), seq[i]);
  }
}

TEST(RequiredBits, Examples) {
  EXPECT_EQ(required_bits(std::vector<int64_t>{0, 0, 0}), 0u);
  EXPECT_EQ(required_bits(std::vector<int64_t>{1, 1, -1, 1}), 2u);
  EXPECT_EQ(required_bits(std::vector<int64_t>{-5, 4}), 4u);
}

TEST(RequiredBits, MatchesDefinitionAndIsMonotone) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 2000; ++t) {
    const int scale = static_cast<int>(rng() % 62);
    std::vector<int64_t> d;
    unsigned prev = 0;
    for (int k = 0; k < 6; ++k) {
      const int64_t x = static_cast<int64_t>(rng() >> (63 - scale)) * ((rng() & 1) ? 1 : -1);
      d.push_back(x);
      const unsigned now = required_bits(d);
      EXPECT_EQ(now, oracle::naive_required_bits(d));
      EXPECT_GE(now, prev);
      prev = now;
    }
  }
  EXPECT_EQ(required_bits(std::vector<int64_t>{INT64_MIN}), 64u);
  EXPECT_EQ(required_bits(std::vector<int64_t>{INT64_MAX}), 64u);
}

TEST(Layout, ValidatesCoverage) {
  PartitionLayout l;
  l.boundaries = {0, 3, 3, 5};
  EXPECT_THROW(l.validate(5), error);
  l.boundaries = {0, 3, 5};
  EXPECT_NO_THROW(l.validate(5));
  EXPECT_THROW(l.validate(6), error);
  l.scheme = Scheme::fixed;
  l.fixed_length = 2;
  EXPECT_THROW(l.validate(5), error);
}
