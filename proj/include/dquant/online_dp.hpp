#pragma once

#include <dquant/dataset.hpp>
#include <dquant/error.hpp>
#include <dquant/quantcore.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dquant {

// ----------------------------------------------------------------------------
// Moving a linear separator onto the diagonal

struct AffineMap {
  double scale = 1.0;
  double offset = 0.0;
  double operator()(double x) const { return scale * x + offset; }
};

// a1 * x1 + a2 * x2 + b = 0
struct LinearSeparator {
  double a1 = 1.0;
  double a2 = -1.0;
  double b = 0.0;
};

// Per-feature increasing affine maps, one applied at each node, that send a
// separator a1 x1 + a2 x2 + b = 0 onto the line t1 = t2.
struct DiagonalTransform {
  AffineMap first;
  AffineMap second;

  LabeledDataset apply(const LabeledDataset& dataset) const {
    if (dataset.n() != 2) throw DimensionError("diagonal transform needs n = 2");
    std::vector<LabeledPoint> points;
    points.reserve(dataset.size());
    for (const auto& p : dataset) {
      points.push_back({{first(p.features[0]), second(p.features[1])}, p.label});
    }
    return LabeledDataset(2, dataset.num_classes(), std::move(points));
  }
};

// With a1 > 0 (the separator is negated first otherwise): t1 = a1 x1 + b and
// t2 = -a2 x2. Points with a1 x1 + a2 x2 + b > 0 (after normalization) land at
// t1 > t2, which is the class-0 side expected by solve_online.
inline DiagonalTransform make_diagonal_transform(LinearSeparator separator) {
  if (separator.a1 == 0.0 || separator.a2 == 0.0) {
    throw AxisParallelSeparator("separator is parallel to an axis; no per-feature reduction exists");
  }
  if ((separator.a1 > 0.0) == (separator.a2 > 0.0)) {
    throw SameSignCoefficients("a1 and a2 share a sign; the per-feature maps cannot both increase");
  }
  if (separator.a1 < 0.0) {
    separator = {-separator.a1, -separator.a2, -separator.b};
  }
  return {{separator.a1, separator.b}, {-separator.a2, 0.0}};
}

// ----------------------------------------------------------------------------
// On-the-line quantizer

// Every x1 and x2 coordinate, sorted and deduplicated; only these values can
// move a training point between bins.
inline std::vector<double> candidate_boundaries(const LabeledDataset& dataset) {
  if (dataset.n() != 2) throw DimensionError("candidate boundaries need n = 2");
  std::vector<double> values;
  values.reserve(2 * dataset.size());
  for (const auto& p : dataset) {
    values.push_back(p.features[0]);
    values.push_back(p.features[1]);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

// Throws unless class 0 lies strictly right of x1 = x2 and class 1 on or left of it.
inline void require_diagonal_separable(const LabeledDataset& dataset) {
  if (dataset.n() != 2) {
    throw DimensionError("on-the-line quantizer needs n = 2, got n = " + std::to_string(dataset.n()));
  }
  if (dataset.num_classes() > 2) {
    throw InvalidArgument("on-the-line quantizer needs at most two classes");
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& p = dataset[i];
    const bool right = p.features[0] > p.features[1];
    if ((p.label == 0) != right) {
      throw NotSeparable("point " + std::to_string(i) + " (class " + std::to_string(p.label) +
                         ") is on the wrong side of x1 = x2");
    }
  }
}

// min over the two classes of the number of points with both coordinates in (low, high].
inline std::size_t block_min_count(const LabeledDataset& dataset, double low, double high) {
  if (dataset.n() != 2) throw DimensionError("block count needs n = 2");
  if (!(low < high)) throw InvalidArgument("block needs low < high");
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& p : dataset) {
    const double x1 = p.features[0];
    const double x2 = p.features[1];
    if (low < x1 && x1 <= high && low < x2 && x2 <= high && p.label < 2) ++counts[p.label];
  }
  return std::min(counts[0], counts[1]);
}

struct OnlineSolution {
  std::vector<double> boundaries;  // shared by both features
  std::size_t misclassified = 0;
  std::size_t point_count = 0;
  double loss = 0.0;
};

// 2^R - 1, saturating.
inline std::uint64_t max_common_boundaries(std::uint32_t rate) {
  return rate >= 64 ? UINT64_MAX : (std::uint64_t{1} << rate) - 1;
}

// Full dynamic-programming table: cost(i, b) is the fewest misclassified
// points among those with both coordinates <= s_i when exactly b boundaries
// are placed strictly below s_i; parent(i, b) is the index of the topmost of
// those boundaries.
class OnlineDpTable {
 public:
  static constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

  OnlineDpTable(const LabeledDataset& dataset, std::uint32_t rate) {
    if (rate == 0) throw InvalidArgument("rate must be positive");
    require_diagonal_separable(dataset);
    candidates_ = candidate_boundaries(dataset);
    const std::size_t m = candidates_.size();
    max_boundaries_ = static_cast<std::size_t>(
        std::min<std::uint64_t>(max_common_boundaries(rate), m - 1));
    const std::size_t width = max_boundaries_ + 1;
    cost_.assign(m * width, kUnreachable);
    parent_.assign(m * width, 0);

    auto rank = [&](double v) {
      return static_cast<std::size_t>(
          std::lower_bound(candidates_.begin(), candidates_.end(), v) - candidates_.begin());
    };
    // Points entering T_{s_i} at step i, keyed by the rank of their larger coordinate.
    std::vector<std::vector<std::pair<std::size_t, ClassLabel>>> by_high(m);
    for (const auto& p : dataset) {
      const double lo = std::min(p.features[0], p.features[1]);
      const double hi = std::max(p.features[0], p.features[1]);
      by_high[rank(hi)].emplace_back(rank(lo), p.label);
    }

    // low_counts[r][c]: points already in T_{s_i} whose smaller coordinate is s_r.
    std::vector<std::array<std::uint32_t, 2>> low_counts(m, {0, 0});
    std::array<std::uint32_t, 2> inside{0, 0};
    std::vector<std::uint32_t> block_min(m, 0);

    for (std::size_t i = 0; i < m; ++i) {
      for (auto [lo_rank, label] : by_high[i]) {
        ++low_counts[lo_rank][label];
        ++inside[label];
      }
      cost_[slot(i, 0)] = std::min(inside[0], inside[1]);

      // block_min[l] = min_c |{j : s_l < x^(j) <= s_i, y^(j) = c}|
      std::array<std::uint32_t, 2> suffix{0, 0};
      for (std::size_t l = i; l-- > 0;) {
        suffix[0] += low_counts[l + 1][0];
        suffix[1] += low_counts[l + 1][1];
        block_min[l] = std::min(suffix[0], suffix[1]);
      }

      for (std::size_t b = 1; b <= max_boundaries_; ++b) {
        std::uint32_t best = kUnreachable;
        std::size_t best_l = 0;
        for (std::size_t l = 0; l < i; ++l) {
          const std::uint32_t prev = cost_[slot(l, b - 1)];
          if (prev == kUnreachable) continue;
          const std::uint32_t candidate = prev + block_min[l];
          if (candidate < best) {
            best = candidate;
            best_l = l;
          }
        }
        cost_[slot(i, b)] = best;
        parent_[slot(i, b)] = static_cast<std::uint32_t>(best_l);
      }
    }
  }

  const std::vector<double>& candidates() const noexcept { return candidates_; }
  std::size_t max_boundaries() const noexcept { return max_boundaries_; }

  std::optional<std::size_t> cost(std::size_t i, std::size_t b) const {
    const std::uint32_t c = cost_[slot(i, b)];
    if (c == kUnreachable) return std::nullopt;
    return c;
  }

  std::size_t parent(std::size_t i, std::size_t b) const { return parent_[slot(i, b)]; }

  // Boundaries of the optimal solution with `b` boundaries over the whole set.
  std::vector<double> boundaries(std::size_t b) const {
    std::vector<double> out;
    std::size_t i = candidates_.size() - 1;
    for (; b > 0; --b) {
      i = parent(i, b);
      out.push_back(candidates_[i]);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t slot(std::size_t i, std::size_t b) const { return i * (max_boundaries_ + 1) + b; }

  std::vector<double> candidates_;
  std::size_t max_boundaries_ = 0;
  std::vector<std::uint32_t> cost_;
  std::vector<std::uint32_t> parent_;
};

// Exact optimal common-boundary quantizer with at most 2^R - 1 boundaries for
// data with class 0 strictly right of x1 = x2 and class 1 on or left of it.
// Runs in O(N^2 2^R) time.
inline OnlineSolution solve_online(const LabeledDataset& dataset, std::uint32_t rate) {
  const OnlineDpTable table(dataset, rate);
  const std::size_t last = table.candidates().size() - 1;
  OnlineSolution solution;
  solution.boundaries = table.boundaries(table.max_boundaries());
  solution.misclassified = *table.cost(last, table.max_boundaries());
  solution.point_count = dataset.size();
  solution.loss = static_cast<double>(solution.misclassified) / static_cast<double>(dataset.size());
  return solution;
}

// Quantizer with the same boundaries on both single-feature nodes.
inline GridQuantizer on_the_line_quantizer(const std::vector<double>& boundaries, std::uint32_t rate) {
  return GridQuantizer(FeaturePartition::singletons(2, Rate::bits(rate)), {boundaries, boundaries});
}

}  // namespace dquant
