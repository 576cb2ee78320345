#include <dquant/online_dp.hpp>
#include <dquant/quantcore.hpp>

#include <gtest/gtest.h>

#include <functional>

#include "test_support.hpp"

using namespace dquant;
using testing_support::naive_misclassified;
using testing_support::random_separable;

namespace {

// Fewest misclassified points over every subset of at most `limit`
// candidate values, scored by the independent cell counter.
std::size_t reference_optimum(const LabeledDataset& ds, std::size_t limit) {
  std::vector<double> values;
  for (const auto& p : ds) {
    values.push_back(p.features[0]);
    values.push_back(p.features[1]);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::size_t best = SIZE_MAX;
  std::vector<double> chosen;
  std::function<void(std::size_t)> walk = [&](std::size_t start) {
    best = std::min(best, naive_misclassified(ds, {chosen, chosen}));
    if (chosen.size() == limit) return;
    for (std::size_t c = start; c < values.size(); ++c) {
      chosen.push_back(values[c]);
      walk(c + 1);
      chosen.pop_back();
    }
  };
  walk(0);
  return best;
}

const LabeledDataset kFourPoints(2, 2, {{{2, 1}, 0}, {{3, 1}, 0}, {{1, 2}, 1}, {{1, 3}, 1}});

}  // namespace

TEST(DiagonalTransform, Examples) {
  const auto identity = make_diagonal_transform({1, -1, 0});
  EXPECT_EQ(identity.first(2.5), 2.5);
  EXPECT_EQ(identity.second(-4.0), -4.0);

  const auto t = make_diagonal_transform({2, -1, 3});
  EXPECT_EQ(t.first(0.0), 3.0);
  EXPECT_EQ(t.second(3.0), 3.0);
  EXPECT_EQ(t.first(1.0), 5.0);
  EXPECT_EQ(t.second(1.0), 1.0);

  EXPECT_THROW(make_diagonal_transform({1, 1, 0}), SameSignCoefficients);
  EXPECT_THROW(make_diagonal_transform({-2, -1, 0}), SameSignCoefficients);
  EXPECT_THROW(make_diagonal_transform({0, -1, 0}), AxisParallelSeparator);
  EXPECT_THROW(make_diagonal_transform({1, 0, 0}), AxisParallelSeparator);
}

TEST(DiagonalTransform, NegatedSeparatorGivesSameMapsAndSolvableData) {
  const auto a = make_diagonal_transform({2, -3, 1});
  const auto b = make_diagonal_transform({-2, 3, -1});
  EXPECT_EQ(a.first.scale, b.first.scale);
  EXPECT_EQ(a.first.offset, b.first.offset);
  EXPECT_EQ(a.second.scale, b.second.scale);
  EXPECT_GT(a.first.scale, 0.0);
  EXPECT_GT(a.second.scale, 0.0);

  // Points labelled by the side of 2 x1 - 3 x2 + 1 = 0 become diagonal-separable.
  Rng rng(6);
  std::vector<LabeledPoint> points;
  while (points.size() < 40) {
    const double x1 = rng.uniform(-5, 5), x2 = rng.uniform(-5, 5);
    const double s = 2 * x1 - 3 * x2 + 1;
    if (std::abs(s) < 1e-6) continue;
    points.push_back({{x1, x2}, s > 0 ? ClassLabel{0} : ClassLabel{1}});
  }
  const auto moved = a.apply(LabeledDataset(2, 2, points));
  EXPECT_NO_THROW(require_diagonal_separable(moved));
  EXPECT_EQ(solve_online(moved, 1).misclassified, reference_optimum(moved, 1));
}

TEST(CandidateBoundaries, Examples) {
  EXPECT_EQ(candidate_boundaries(synth_xor()), (std::vector<double>{-1, 1}));
  const LabeledDataset distinct(2, 2, {{{1, 2}, 1}, {{4, 3}, 0}, {{5, 6}, 1}});
  EXPECT_EQ(candidate_boundaries(distinct).size(), 6u);
  const LabeledDataset diagonal(2, 2, {{{1, 1}, 1}, {{2, 2}, 1}, {{3, 3}, 1}});
  EXPECT_EQ(candidate_boundaries(diagonal).size(), 3u);
  EXPECT_THROW(candidate_boundaries(LabeledDataset(1, 1, {{{0.0}, 0}})), DimensionError);
}

TEST(BlockMinCount, Examples) {
  const LabeledDataset ds(2, 2, {{{1, 0.5}, 0}, {{0.5, 1}, 1}, {{2, 1.5}, 0}, {{2.5, 2}, 0}, {{2.2, 2.1}, 0},
                                 {{1.6, 2.4}, 1}, {{9, 9}, 1}});
  EXPECT_EQ(block_min_count(ds, 0.0, 1.0), 1u);
  EXPECT_EQ(block_min_count(ds, 3.0, 4.0), 0u);
  EXPECT_EQ(block_min_count(ds, 1.0, 3.0), 1u);  // three class 0, one class 1
  EXPECT_THROW(block_min_count(ds, 2.0, 2.0), InvalidArgument);
}

TEST(SolveOnline, FourPointExample) {
  const auto s = solve_online(kFourPoints, 1);
  EXPECT_EQ(s.boundaries, std::vector<double>{1.0});
  EXPECT_EQ(s.misclassified, 0u);
  EXPECT_EQ(s.loss, 0.0);
}

TEST(SolveOnline, Preconditions) {
  EXPECT_THROW(solve_online(synth_xor(), 1), NotSeparable);
  EXPECT_THROW(solve_online(LabeledDataset(3, 2, {{{0, 0, 0}, 1}}), 1), DimensionError);
  EXPECT_THROW(solve_online(LabeledDataset(2, 3, {{{1, 0}, 0}}), 1), InvalidArgument);
  EXPECT_THROW(solve_online(kFourPoints, 0), InvalidArgument);
  // The reverse orientation is rejected rather than flipped.
  const LabeledDataset flipped(2, 2, {{{2, 1}, 1}, {{1, 2}, 0}});
  EXPECT_THROW(solve_online(flipped, 1), NotSeparable);
  // Points on the line belong to class 1.
  EXPECT_NO_THROW(solve_online(LabeledDataset(2, 2, {{{1, 1}, 1}, {{2, 1}, 0}}), 1));
  EXPECT_THROW(solve_online(LabeledDataset(2, 2, {{{1, 1}, 0}}), 1), NotSeparable);
}

TEST(SolveOnline, SingleClassAndSinglePoint) {
  const LabeledDataset one(2, 2, {{{0.5, 0.25}, 0}});
  const auto s = solve_online(one, 3);
  EXPECT_EQ(s.misclassified, 0u);
  EXPECT_LE(s.boundaries.size(), 1u);
  const LabeledDataset only_ones(2, 2, {{{0, 1}, 1}, {{-2, 3}, 1}});
  EXPECT_EQ(solve_online(only_ones, 1).misclassified, 0u);
}

TEST(SolveOnline, LargeBudgetGivesZeroLoss) {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ds = random_separable(rng, 1 + rng.below(15), trial % 2 == 0);
    EXPECT_EQ(solve_online(ds, 6).misclassified, 0u);
  }
  const auto seeded = synth_linear2d(20, 7, 0.0);
  EXPECT_EQ(solve_online(seeded, 6).misclassified, 0u);
}

TEST(SolveOnline, MatchesReferenceSearch) {
  Rng rng(31);
  for (int trial = 0; trial < 120; ++trial) {
    const std::uint32_t rate = 1 + static_cast<std::uint32_t>(trial % 2);
    const bool grid = trial % 3 != 0;
    const auto ds = random_separable(rng, 2 + rng.below(grid ? 10 : 6), grid);
    const auto s = solve_online(ds, rate);
    EXPECT_EQ(s.misclassified, reference_optimum(ds, (1u << rate) - 1)) << "trial " << trial;
  }
}

TEST(SolveOnline, SolutionInvariants) {
  Rng rng(37);
  for (int trial = 0; trial < 150; ++trial) {
    const auto ds = random_separable(rng, 1 + rng.below(20), trial % 2 == 0);
    std::size_t previous = SIZE_MAX;
    for (std::uint32_t rate = 1; rate <= 4; ++rate) {
      const auto s = solve_online(ds, rate);
      EXPECT_LE(s.boundaries.size(), (1u << rate) - 1);
      EXPECT_TRUE(std::is_sorted(s.boundaries.begin(), s.boundaries.end()));
      EXPECT_EQ(std::adjacent_find(s.boundaries.begin(), s.boundaries.end()), s.boundaries.end());
      EXPECT_EQ(s.loss, static_cast<double>(s.misclassified) / static_cast<double>(ds.size()));
      // Monotone in the budget.
      EXPECT_LE(s.misclassified, previous);
      previous = s.misclassified;

      // Agrees with the grid machinery.
      const auto q = on_the_line_quantizer(s.boundaries, rate);
      EXPECT_EQ(optimal_misclassified(q, ds), s.misclassified);

      // Cells strictly off the diagonal hold one class.
      const CellStatistics stats(q, ds);
      for (std::size_t cell = 0; cell < stats.cell_count(); ++cell) {
        if (stats.indices(cell)[0] != stats.indices(cell)[1]) {
          EXPECT_LE(stats.distinct_classes(cell), 1u);
        }
      }
    }
  }
}

TEST(OnlineDpTable, MonotoneInBoundaryCountAndReachability) {
  Rng rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    const auto ds = random_separable(rng, 2 + rng.below(14), trial % 2 == 0);
    const OnlineDpTable table(ds, 3);
    const std::size_t m = table.candidates().size();
    EXPECT_EQ(table.max_boundaries(), std::min<std::size_t>(7, m - 1));
    for (std::size_t i = 0; i < m; ++i) {
      std::optional<std::size_t> previous;
      for (std::size_t b = 0; b <= table.max_boundaries(); ++b) {
        const auto c = table.cost(i, b);
        // Exactly b boundaries below s_i need b candidates below it.
        EXPECT_EQ(c.has_value(), b <= i) << "i=" << i << " b=" << b;
        if (!c) continue;
        if (previous) {
          EXPECT_LE(*c, *previous);
        }
        previous = c;
        if (b > 0) {
          EXPECT_LT(table.parent(i, b), i);
        }
      }
    }
  }
}

TEST(OnlineDpTable, BaseRowCountsPointsBelow) {
  const OnlineDpTable table(kFourPoints, 1);
  // s = 1, 2, 3; nothing is entirely <= 1; both class-0 points and both class-1 points are <= 3.
  EXPECT_EQ(table.cost(0, 0), 0u);
  EXPECT_EQ(table.cost(1, 0), 1u);
  EXPECT_EQ(table.cost(2, 0), 2u);
  EXPECT_EQ(table.cost(2, 1), 0u);
  EXPECT_EQ(table.parent(2, 1), 0u);
}
