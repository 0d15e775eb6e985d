#include <gtest/gtest.h>

#include <random>

#include "leco/leco.hpp"
#include "support/oracles.hpp"

using namespace leco;

namespace {

const std::vector<int64_t> kDeltaExample = {30, 31, 32, 29, 49};

PartitionCostModel cost_of(uint64_t sm, double tau = 0.1) { return PartitionCostModel{sm, tau}; }

std::vector<int64_t> piecewise_noisy(std::mt19937_64& rng, size_t n) {
  std::vector<int64_t> v(n);
  int64_t base = static_cast<int64_t>(rng() % 1000);
  int64_t slope = static_cast<int64_t>(rng() % 50);
  const int64_t noise = 1 + static_cast<int64_t>(rng() % 8);
  for (size_t i = 0; i < n; ++i) {
    if (rng() % 64 == 0) {
      base += static_cast<int64_t>(rng() % 100000);
      slope = static_cast<int64_t>(rng() % 50);
    }
    base += slope;
    v[i] = base + static_cast<int64_t>(rng() % static_cast<uint64_t>(noise));
  }
  return v;
}

}  // namespace

TEST(PartitionSize, Examples) {
  EXPECT_EQ(partition_size_bits(std::vector<int64_t>{5, 5, 5, 5}, Regressor::constant, cost_of(80)), 80u);
  EXPECT_EQ(partition_size_bits(std::vector<int64_t>{3, 5, 7, 9}, Regressor::linear, cost_of(160)), 160u);
  EXPECT_EQ(partition_size_bits(std::vector<int64_t>{0, 3, 4, 9}, Regressor::linear, cost_of(160)), 168u);
}

TEST(CostModel, Validation) {
  EXPECT_THROW(cost_of(0).validate(), error);
  EXPECT_THROW(cost_of(8, 1.5).validate(), error);
  EXPECT_NO_THROW(cost_of(8, 1.0).validate());
  EXPECT_EQ(cost_model_for(Regressor::step).model_size_bits, 152u);
  EXPECT_EQ(cost_model_for(Regressor::linear).model_size_bits, 248u);
}

TEST(InclusionCost, Examples) {
  EXPECT_EQ(inclusion_cost(std::vector<int64_t>{30, 31, 32}, 29, Regressor::step), 6);
  EXPECT_EQ(inclusion_cost(std::vector<int64_t>{3, 5, 7}, 9, Regressor::linear), 0);
  const std::vector<int64_t> slice = {0, 1};
  const int64_t before = 2 * static_cast<int64_t>(max_residual_bits(slice, Regressor::step));
  const int64_t after = 3 * static_cast<int64_t>(max_residual_bits(std::vector<int64_t>{0, 1, 100}, Regressor::step));
  EXPECT_EQ(inclusion_cost(slice, 100, Regressor::step), after - before);
}

TEST(InclusionCost, MatchesRecomputation) {
  std::mt19937_64 rng(21);
  for (Regressor r : {Regressor::constant, Regressor::linear, Regressor::step, Regressor::poly2}) {
    for (int t = 0; t < 100; ++t) {
      std::vector<int64_t> v(4 + rng() % 20);
      for (auto& x : v) x = static_cast<int64_t>(rng() % 5000);
      const std::span<const int64_t> slice(v.data(), v.size() - 1);
      const int64_t want = static_cast<int64_t>(v.size()) * max_residual_bits(v, r) -
                           static_cast<int64_t>(slice.size()) * max_residual_bits(slice, r);
      EXPECT_EQ(inclusion_cost(slice, v.back(), r), want) << to_string(r);
    }
  }
}

TEST(PartitionFixed, Examples) {
  EXPECT_EQ(partition_fixed(10, 4).boundaries, (std::vector<uint64_t>{0, 4, 8, 10}));
  EXPECT_EQ(partition_fixed(4, 4).boundaries, (std::vector<uint64_t>{0, 4}));
  EXPECT_EQ(partition_fixed(5, 1).boundaries, (std::vector<uint64_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_THROW(partition_fixed(5, 0), error);
}

TEST(SearchFixedLength, BeatsSweepEndpointsOnDriftingLine) {
  // A slow quadratic drift makes long partitions pay in residual width.
  std::mt19937_64 rng(5);
  std::vector<int64_t> v(100000);
  for (size_t i = 0; i < v.size(); ++i)
    v[i] = 1000 * static_cast<int64_t>(i) + static_cast<int64_t>(i * i / 5000) + static_cast<int64_t>(rng() % 600);
  const IntSequence seq(std::move(v), 64);
  const uint64_t l = search_fixed_length(seq.values(), Regressor::linear);
  const auto cost = cost_model_for(Regressor::linear, Scheme::fixed);
  const auto size_at = [&](uint64_t len) { return layout_size_bits(seq.values(), partition_fixed(seq.size(), len), Regressor::linear, cost); };
  EXPECT_LE(size_at(l), size_at(64));
  EXPECT_LE(size_at(l), size_at(16384));
}

TEST(SearchFixedLength, ConstantDataPicksLargestProbe) {
  const std::vector<int64_t> seq(3000, 77);
  std::vector<FixedSearchProbe> probes;
  const uint64_t l = search_fixed_length(seq, Regressor::linear, {}, &probes);
  for (const auto& p : probes) EXPECT_LE(p.length, l);
}

TEST(SearchFixedLength, SmallInputReturnsBestProbe) {
  std::mt19937_64 rng(4);
  std::vector<int64_t> seq(100);
  for (size_t i = 0; i < seq.size(); ++i) seq[i] = static_cast<int64_t>(i * i) + static_cast<int64_t>(rng() % 30);
  std::vector<FixedSearchProbe> probes;
  const uint64_t l = search_fixed_length(seq, Regressor::linear, {}, &probes);
  double best = probes.front().ratio;
  for (const auto& p : probes) best = std::min(best, p.ratio);
  bool found = false;
  for (const auto& p : probes) found = found || (p.length == l && p.ratio == best);
  EXPECT_TRUE(found) << "returned " << l;
}

TEST(StartPositions, ArithmeticRuns) {
  const std::vector<int64_t> seq = {3, 5, 7, 9, 100, 102, 104};
  const auto seeds = select_start_positions(seq, Regressor::linear);
  ASSERT_EQ(seeds.size(), 2u);
  for (const auto& s : seeds) {
    EXPECT_EQ(s.end - s.begin, 3u);
    EXPECT_TRUE(s.end <= 4 || s.begin >= 4) << s.begin;
  }
}

TEST(StartPositions, DeltaBitsZero) {
  const auto seeds = select_start_positions(kDeltaExample, Regressor::step);
  EXPECT_EQ(seeds, (std::vector<Seed>{{0, 3}}));
}

TEST(StartPositions, ConvexDataStartsEarliest) {
  std::vector<int64_t> seq(40);
  for (size_t i = 0; i < seq.size(); ++i) seq[i] = static_cast<int64_t>(i * i);
  const auto seeds = select_start_positions(seq, Regressor::linear, SeedOptions{1});
  ASSERT_EQ(seeds.size(), 1u);
  // Every window has the same second difference; the earliest wins the tie.
  EXPECT_EQ(seeds[0], (Seed{0, 3}));
}

TEST(PartitionVariable, DeltaExampleTrace) {
  PartitionTrace trace;
  const auto layout = partition_variable(kDeltaExample, Regressor::step, cost_of(32, 0.5), &trace);
  EXPECT_EQ(trace.seeds, (std::vector<Seed>{{0, 3}}));
  ASSERT_FALSE(trace.inclusions.empty());
  EXPECT_EQ(trace.inclusions[0].position, 3u);
  EXPECT_EQ(trace.inclusions[0].cost, 6);
  EXPECT_EQ(trace.split_boundaries, (std::vector<uint64_t>{0, 4}));
  // 49 costs 5 * 6 - 4 * 3 = 18 > 16 and opens its own partition.
  EXPECT_EQ(inclusion_cost(std::span<const int64_t>(kDeltaExample.data(), 4), 49, Regressor::step), 18);
  ASSERT_EQ(trace.merges.size(), 1u);
  EXPECT_EQ(trace.merges[0].merged_bits, 62u);
  EXPECT_EQ(trace.merges[0].separate_bits, 76u);
  EXPECT_EQ(layout.boundaries, (std::vector<uint64_t>{0, 5}));
}

TEST(PartitionVariable, CleanLineIsOnePartition) {
  std::vector<int64_t> seq(2000);
  for (size_t i = 0; i < seq.size(); ++i) seq[i] = 17 + 9 * static_cast<int64_t>(i);
  const auto layout = partition_variable(seq, Regressor::linear, cost_model_for(Regressor::linear));
  EXPECT_EQ(layout.boundaries, (std::vector<uint64_t>{0, seq.size()}));
}

TEST(PartitionVariable, TwoRunsWithJump) {
  std::vector<int64_t> seq;
  for (int64_t i = 0; i < 300; ++i) seq.push_back(5 + 3 * i);
  for (int64_t i = 0; i < 300; ++i) seq.push_back(1000000 + 7 * i);
  const auto cost = cost_model_for(Regressor::linear);
  const auto layout = partition_variable(seq, Regressor::linear, cost);
  ASSERT_EQ(layout.boundaries, (std::vector<uint64_t>{0, 300, 600}));
  for (size_t j = 0; j < 2; ++j)
    EXPECT_EQ(max_residual_bits(std::span<const int64_t>(seq).subspan(layout.begin(j), layout.length(j)), Regressor::linear), 0u);
  EXPECT_EQ(dp_optimal_partition(seq, Regressor::linear, cost).boundaries, layout.boundaries);
}

TEST(PartitionVariable, CoverageAndPhaseGuarantees) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 150; ++t) {
    const Regressor r = std::array{Regressor::constant, Regressor::linear, Regressor::step, Regressor::poly2}[t % 4];
    const auto seq = piecewise_noisy(rng, 1 + rng() % 400);
    const double tau = static_cast<double>(rng() % 11) / 10;
    const auto cost = cost_model_for(r, Scheme::variable, tau);
    PartitionTrace trace;
    const auto layout = partition_variable(seq, r, cost, &trace);
    EXPECT_NO_THROW(layout.validate(seq.size()));
    for (const auto& inc : trace.inclusions) EXPECT_LE(static_cast<double>(inc.cost), tau * static_cast<double>(cost.model_size_bits));
    for (const auto& m : trace.merges) EXPECT_LT(m.merged_bits, m.separate_bits);
    EXPECT_LE(trace.merges.size() + 1, trace.split_boundaries.size());
    EXPECT_EQ(trace.split_boundaries.size() - trace.merges.size(), layout.partition_count());
  }
}

TEST(DpOptimal, Examples) {
  const auto cost = cost_model_for(Regressor::linear);
  EXPECT_EQ(dp_optimal_partition(std::vector<int64_t>{3, 5, 7, 9}, Regressor::linear, cost).boundaries, (std::vector<uint64_t>{0, 4}));
  EXPECT_EQ(dp_optimal_partition(std::vector<int64_t>(50, -4), Regressor::linear, cost).boundaries, (std::vector<uint64_t>{0, 50}));
  const std::vector<int64_t> seq = {0, 1, 2, 3, 1000, 1001, 1002, 1003};
  const PartitionCostModel small = cost_of(8);
  EXPECT_EQ(dp_optimal_partition(seq, Regressor::linear, small).boundaries,
            oracle::enumerate_best_layout(seq, Regressor::linear, small).boundaries);
}

TEST(DpOptimal, MatchesEnumeration) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 120; ++t) {
    const Regressor r = std::array{Regressor::constant, Regressor::linear, Regressor::step}[t % 3];
    std::vector<int64_t> seq(1 + rng() % 10);
    for (auto& x : seq) x = static_cast<int64_t>(rng() % 64) + (rng() % 4 == 0 ? 100000 : 0);
    const PartitionCostModel cost = cost_of(1 + rng() % 40);
    const auto dp = dp_optimal_partition(seq, r, cost);
    const auto best = oracle::enumerate_best_layout(seq, r, cost);
    EXPECT_EQ(dp.boundaries, best.boundaries) << to_string(r);
    EXPECT_EQ(layout_size_bits(seq, dp, r, cost), layout_size_bits(seq, best, r, cost));
  }
}

TEST(DpOptimal, SizeLimit) {
  const std::vector<int64_t> seq(kDpOracleLimit + 1, 0);
  try {
    dp_optimal_partition(seq, Regressor::linear, cost_of(8));
    FAIL() << "expected the size limit";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::oracle_size_limit);
  }
}

TEST(DpOptimal, NeverWorseThanGreedy) {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 20; ++t) {
    const auto seq = piecewise_noisy(rng, 64 + rng() % 200);
    const auto cost = cost_model_for(Regressor::linear);
    EXPECT_LE(layout_size_bits(seq, dp_optimal_partition(seq, Regressor::linear, cost), Regressor::linear, cost),
              layout_size_bits(seq, partition_variable(seq, Regressor::linear, cost), Regressor::linear, cost));
  }
}
