#include <dquant/gbi.hpp>
#include <dquant/oracle.hpp>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace dquant;

namespace {

FeaturePartition singles(std::size_t n, std::uint32_t bits) {
  return FeaturePartition::singletons(n, Rate::bits(bits));
}

}  // namespace

TEST(PurityScore, Examples) {
  const GridQuantizer one(singles(1, 1));
  const LabeledDataset pure(1, 2, {{{0.0}, 1}, {{1.0}, 1}});
  EXPECT_EQ(purity_score(one, pure), 0.0);

  const LabeledDataset three_one(1, 2, {{{0.0}, 0}, {{1.0}, 0}, {{2.0}, 0}, {{3.0}, 1}});
  EXPECT_DOUBLE_EQ(purity_score(one, three_one), 9.0 / 4.0);

  // Cells split at 10: left has 2 vs 1, right has 3 vs 2, plus two pure points.
  std::vector<LabeledPoint> points{{{0.0}, 0}, {{1.0}, 0}, {{2.0}, 1}, {{11.0}, 1}, {{12.0}, 1},
                                   {{13.0}, 1}, {{14.0}, 0}, {{15.0}, 0}};
  points.push_back({{30.0}, 2});
  points.push_back({{31.0}, 2});
  const LabeledDataset two_cells(1, 3, points);
  const GridQuantizer split(FeaturePartition::singletons(1, Rate::bits(2)), {{10.0, 20.0}});
  EXPECT_DOUBLE_EQ(purity_score(split, two_cells), 1.3);
}

TEST(PurityScore, UsesJointCells) {
  // Feature-wise each projection is mixed, but every joint cell is pure.
  const auto xor_set = synth_xor();
  const GridQuantizer q(singles(2, 1), {{-1.0}, {-1.0}});
  EXPECT_EQ(purity_score(q, xor_set), 0.0);
  EXPECT_EQ(testing_support::naive_purity_sum(xor_set, q.all_boundaries()), 0u);
}

TEST(Gbi, XorReachesZeroLoss) {
  const auto result = gbi_fit(synth_xor(), singles(2, 1));
  EXPECT_EQ(result.quantizer.boundaries(0), std::vector<double>{-1.0});
  EXPECT_EQ(result.quantizer.boundaries(1), std::vector<double>{-1.0});
  ASSERT_EQ(result.trace.steps.size(), 2u);
  EXPECT_EQ(result.trace.steps.back().loss, 0.0);
  EXPECT_EQ(optimal_loss(result.quantizer, synth_xor()), 0.0);
  // The first insertion cannot reduce the loss on XOR; purity decides it.
  EXPECT_EQ(result.trace.steps[0].misclassified, 2u);
  EXPECT_EQ(result.trace.steps[0].feature, 0u);
}

TEST(Gbi, ZeroRatesInsertNothing) {
  testing_support::Rng rng(4);
  const auto ds = testing_support::random_grid_dataset(rng, 30, 3, 3, 5);
  const auto result = gbi_fit(ds, singles(3, 0));
  EXPECT_TRUE(result.trace.steps.empty());
  EXPECT_EQ(result.quantizer.total_boundaries(), 0u);
  const auto hist = ds.class_histogram();
  EXPECT_DOUBLE_EQ(optimal_loss(result.quantizer, ds),
                   1.0 - static_cast<double>(*std::max_element(hist.begin(), hist.end())) / 30.0);
}

TEST(Gbi, SingleClassStaysAtZero) {
  const LabeledDataset ds(2, 1, {{{0, 0}, 0}, {{1, 2}, 0}, {{3, 1}, 0}, {{2, 2}, 0}});
  const auto result = gbi_fit(ds, singles(2, 2));
  EXPECT_FALSE(result.trace.steps.empty());
  for (const auto& s : result.trace.steps) {
    EXPECT_EQ(s.loss, 0.0);
    EXPECT_EQ(s.purity, 0.0);
  }
}

TEST(Gbi, EachStepMatchesBruteForceChoice) {
  testing_support::Rng rng(8);
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t n = 1 + rng.below(3);
    const auto ds = testing_support::random_grid_dataset(rng, 2 + rng.below(20), n, 2 + rng.below(2), 6);
    std::vector<std::vector<std::size_t>> groups;
    std::vector<Rate> rates;
    if (n == 3 && trial % 2 == 0) {
      groups = {{0, 2}, {1}};
      rates = {Rate::bits(3), Rate::bits(1)};
    } else {
      for (std::size_t f = 0; f < n; ++f) {
        groups.push_back({f});
        rates.push_back(Rate::bits(static_cast<std::uint32_t>(rng.below(3))));
      }
    }
    const FeaturePartition partition(n, groups, rates);
    const auto result = gbi_fit(ds, partition);

    GridQuantizer replay(partition);
    for (const auto& step : result.trace.steps) {
      const auto expected = testing_support::naive_gbi_choice(ds, replay);
      ASSERT_TRUE(expected.has_value());
      EXPECT_EQ(step.feature, expected->feature) << "trial " << trial;
      EXPECT_EQ(step.value, expected->value) << "trial " << trial;
      replay = replay.with_boundary(step.feature, step.value);
      EXPECT_EQ(step.misclassified, testing_support::naive_misclassified(ds, replay.all_boundaries()));
      EXPECT_DOUBLE_EQ(step.purity,
                       static_cast<double>(testing_support::naive_purity_sum(ds, replay.all_boundaries())) /
                           static_cast<double>(ds.size()));
    }
    EXPECT_EQ(replay, result.quantizer);
    // Stopped because nothing was left to insert.
    EXPECT_FALSE(testing_support::naive_gbi_choice(ds, result.quantizer).has_value());
  }
}

TEST(Gbi, TraceInvariants) {
  testing_support::Rng rng(15);
  for (int trial = 0; trial < 60; ++trial) {
    const auto ds = testing_support::random_grid_dataset(rng, 5 + rng.below(40), 3, 3, 8);
    const FeaturePartition partition(3, {{0, 1}, {2}}, {Rate::bits(2 + rng.below(2)), Rate::bits(rng.below(3))});
    const auto result = gbi_fit(ds, partition);
    const double baseline = optimal_loss(GridQuantizer(partition), ds);
    double previous = baseline;
    GridQuantizer replay(partition);
    for (const auto& s : result.trace.steps) {
      EXPECT_LE(s.loss, previous);
      previous = s.loss;
      EXPECT_LE(s.candidates_evaluated, ds.n() * ds.size());
      replay = replay.with_boundary(s.feature, s.value);
      for (std::size_t k = 0; k < partition.node_count(); ++k) {
        EXPECT_TRUE(partition.rate(k).admits(replay.bin_count(k)));
      }
    }
    EXPECT_LE(optimal_loss(result.quantizer, ds), baseline);
  }
}

TEST(Gbi, BatchOfEveryPointEqualsFullMode) {
  testing_support::Rng rng(20);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ds = testing_support::random_grid_dataset(rng, 4 + rng.below(30), 2, 2, 6);
    const auto partition = singles(2, 2);
    const auto full = gbi_fit(ds, partition);
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
      GbiConfig config;
      config.batch_size = ds.size();
      config.seed = seed;
      const auto batched = gbi_fit(ds, partition, config);
      EXPECT_EQ(batched.quantizer, full.quantizer);
      ASSERT_EQ(batched.trace.steps.size(), full.trace.steps.size());
      for (std::size_t i = 0; i < full.trace.steps.size(); ++i) {
        EXPECT_EQ(batched.trace.steps[i].misclassified, full.trace.steps[i].misclassified);
      }
    }
  }
}

TEST(Gbi, StochasticModeIsSeededAndUsesTrainingValues) {
  const auto ds = synth_linear2d(120, 3, 0.0);
  GbiConfig config;
  config.batch_size = 20;
  config.seed = 5;
  const auto a = gbi_fit(ds, singles(2, 3), config);
  const auto b = gbi_fit(ds, singles(2, 3), config);
  EXPECT_EQ(a.quantizer, b.quantizer);
  for (std::size_t f = 0; f < 2; ++f) {
    for (double d : a.quantizer.boundaries(f)) {
      EXPECT_TRUE(std::any_of(ds.begin(), ds.end(), [&](const LabeledPoint& p) { return p.features[f] == d; }));
    }
    EXPECT_LE(a.quantizer.boundaries(f).size(), 7u);
  }
  config.batch_size = 0;
  EXPECT_THROW(gbi_fit(ds, singles(2, 3), config), InvalidArgument);
  config.batch_size = 121;
  EXPECT_THROW(gbi_fit(ds, singles(2, 3), config), InvalidArgument);
}

TEST(Gbi, UnboundedRatesAndIterationCap) {
  testing_support::Rng rng(2);
  const auto ds = testing_support::random_grid_dataset(rng, 25, 2, 2, 5);
  const auto unbounded = gbi_fit(ds, FeaturePartition::singletons(2, Rate::unbounded()));
  // Every distinct value except the largest ends up a boundary.
  for (std::size_t f = 0; f < 2; ++f) {
    std::set<double> values;
    for (const auto& p : ds) values.insert(p.features[f]);
    EXPECT_EQ(unbounded.quantizer.boundaries(f).size(), values.size() - 1);
  }
  GbiConfig capped;
  capped.max_iterations = 2;
  EXPECT_EQ(gbi_fit(ds, FeaturePartition::singletons(2, Rate::unbounded()), capped).trace.steps.size(), 2u);
}

TEST(Gbi, TieBreaksTowardLowerFeatureAndValue) {
  // Both features separate the classes equally well at value 0 and at 1.
  const LabeledDataset ds(2, 2, {{{0, 0}, 0}, {{1, 1}, 1}, {{2, 2}, 1}});
  GbiConfig one_step;
  one_step.max_iterations = 1;
  const auto result = gbi_fit(ds, singles(2, 1), one_step);
  ASSERT_EQ(result.trace.steps.size(), 1u);
  EXPECT_EQ(result.trace.steps[0].feature, 0u);
  EXPECT_EQ(result.trace.steps[0].value, 0.0);
}

TEST(Gbi, WhileGuardUsesCheapestFeature) {
  // Node {0,1} with 3 bits: after two boundaries on feature 0 (3 bins), a
  // boundary on feature 1 would need 6 bins but feature 0 can still grow.
  const LabeledDataset ds(2, 2, {{{0, 0}, 0}, {{1, 0}, 1}, {{2, 0}, 0}, {{3, 0}, 1}, {{4, 0}, 0}, {{5, 0}, 1},
                                 {{6, 0}, 0}, {{7, 0}, 1}, {{8, 0}, 0}});
  const FeaturePartition p(2, {{0, 1}}, {Rate::bits(3)});
  const auto result = gbi_fit(ds, p);
  EXPECT_EQ(result.quantizer.boundaries(0).size(), 7u);
  EXPECT_TRUE(result.quantizer.boundaries(1).empty());
  EXPECT_EQ(result.quantizer.bin_count(0), 8u);
}

TEST(Gbi, NeverBeatsExhaustiveSearch) {
  testing_support::Rng rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(2);
    const auto ds = testing_support::random_grid_dataset(rng, 3 + rng.below(8), n, 2, 4);
    const auto partition = singles(n, static_cast<std::uint32_t>(rng.below(3)));
    const auto greedy = gbi_fit(ds, partition);
    const auto exact = brute_force_grid(ds, partition);
    EXPECT_GE(optimal_misclassified(greedy.quantizer, ds), exact.misclassified);
    EXPECT_LE(exact.loss, 1.0);
  }
}

TEST(Gbi, DimensionMismatch) {
  EXPECT_THROW(gbi_fit(synth_xor(), singles(3, 1)), DimensionError);
}
