#pragma once

#include <dquant/dataset.hpp>
#include <dquant/error.hpp>
#include <dquant/quantcore.hpp>
#include <dquant/rng.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace dquant {

struct GbiConfig {
  // Stochastic mode: each iteration scores candidates on this many points
  // drawn without replacement.
  std::optional<std::size_t> batch_size;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_iterations;
};

// One accepted insertion. Loss and purity are measured on the full dataset
// after the insertion.
struct GbiStep {
  std::size_t feature = 0;
  double value = 0.0;
  std::size_t misclassified = 0;
  double loss = 0.0;
  double purity = 0.0;
  std::size_t candidates_evaluated = 0;
};

struct GbiTrace {
  std::vector<GbiStep> steps;
};

struct GbiResult {
  GridQuantizer quantizer;
  GbiTrace trace;
};

namespace detail {

struct CellScore {
  std::uint64_t misclassified = 0;
  std::uint64_t purity = 0;  // B^2, B = majority count of a mixed cell
};

inline CellScore score_counts(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  std::size_t best = 0;
  std::size_t distinct = 0;
  for (std::size_t c : counts) {
    total += c;
    best = std::max(best, c);
    if (c > 0) ++distinct;
  }
  const std::uint64_t b = distinct >= 2 ? best : 0;
  return {total - best, b * b};
}

// Sum of B^2 over the joint cells.
inline std::uint64_t purity_sum(const CellStatistics& stats) {
  std::uint64_t total = 0;
  for (std::size_t cell = 0; cell < stats.cell_count(); ++cell) {
    total += score_counts(stats.counts(cell)).purity;
  }
  return total;
}

// Partial Fisher-Yates: the first `count` entries of a shuffled 0..N-1, sorted.
inline std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                           Rng& rng) {
  std::vector<std::size_t> order(population);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(population - i));
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace detail

// U = sum over mixed joint cells of (majority count)^2, divided by N.
inline double purity_score(const GridQuantizer& quantizer, const LabeledDataset& dataset) {
  const CellStatistics stats(quantizer, dataset);
  return static_cast<double>(detail::purity_sum(stats)) / static_cast<double>(dataset.size());
}

// Greedy boundary insertion. Each iteration inserts the budget-feasible
// (feature, value) pair with the fewest misclassified points afterwards;
// ties go to the lower purity sum, then the lower feature, then the lower
// value. Candidates are the distinct training values of each feature, minus
// the largest value of each current interval (that would leave the upper
// part empty, or duplicate an existing boundary).
inline GbiResult gbi_fit(const LabeledDataset& dataset, const FeaturePartition& partition,
                         const GbiConfig& config = {}) {
  if (dataset.n() != partition.n()) {
    throw DimensionError("dataset has " + std::to_string(dataset.n()) + " features, partition covers " +
                         std::to_string(partition.n()));
  }
  const std::size_t total = dataset.size();
  if (config.batch_size && (*config.batch_size == 0 || *config.batch_size > total)) {
    throw InvalidArgument("batch size must be in [1, " + std::to_string(total) + "]");
  }

  const std::size_t n = dataset.n();
  const std::size_t classes = dataset.num_classes();

  std::vector<std::vector<double>> values(n);
  for (std::size_t f = 0; f < n; ++f) {
    for (const auto& p : dataset) values[f].push_back(p.features[f]);
    std::sort(values[f].begin(), values[f].end());
    values[f].erase(std::unique(values[f].begin(), values[f].end()), values[f].end());
  }

  GridQuantizer quantizer(partition);
  GbiTrace trace;
  Rng rng(config.seed);

  for (std::size_t iteration = 0; !config.max_iterations || iteration < *config.max_iterations;
       ++iteration) {
    std::optional<LabeledDataset> batch;
    if (config.batch_size) {
      batch = dataset.subset(detail::sample_without_replacement(total, *config.batch_size, rng));
    }
    const LabeledDataset& eval = batch ? *batch : dataset;
    const CellStatistics stats(quantizer, eval);
    const std::size_t cells = stats.cell_count();

    std::uint64_t base_misclassified = stats.misclassified();
    std::uint64_t base_purity = detail::purity_sum(stats);

    // Per-cell counts on each side of the swept candidate.
    std::vector<std::size_t> left(cells * classes, 0);
    std::vector<std::size_t> right(cells * classes, 0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      std::copy_n(stats.counts(cell).begin(), classes, right.begin() + cell * classes);
    }
    auto side = [&](std::vector<std::size_t>& v, std::size_t cell) {
      return std::span<const std::size_t>(v).subspan(cell * classes, classes);
    };

    struct Choice {
      std::uint64_t misclassified;
      std::uint64_t purity;
      std::size_t feature;
      double value;
    };
    std::optional<Choice> best;
    std::size_t evaluated = 0;

    std::vector<std::size_t> order(eval.size());
    std::vector<char> touched(cells, 0);
    std::vector<std::size_t> touched_cells;

    for (std::size_t f = 0; f < n; ++f) {
      if (!quantizer.can_split(f)) continue;
      const auto& d = quantizer.boundaries(f);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return eval[a].features[f] < eval[b].features[f];
      });

      std::size_t point = 0;
      std::size_t value = 0;
      for (std::size_t j = 0; j <= d.size(); ++j) {
        const double upper = j < d.size() ? d[j] : std::numeric_limits<double>::infinity();
        std::size_t value_end = value;
        while (value_end < values[f].size() && values[f][value_end] <= upper) ++value_end;
        std::size_t point_end = point;
        while (point_end < order.size() && eval[order[point_end]].features[f] <= upper) ++point_end;

        if (value_end - value >= 2) {
          touched_cells.clear();
          for (std::size_t q = point; q < point_end; ++q) {
            const std::size_t cell = stats.cell_of_point(order[q]);
            if (!touched[cell]) {
              touched[cell] = 1;
              touched_cells.push_back(cell);
            }
          }
          std::uint64_t misclassified = base_misclassified;
          std::uint64_t purity = base_purity;
          std::size_t q = point;
          for (std::size_t c = value; c + 1 < value_end; ++c) {
            const double v = values[f][c];
            for (; q < point_end && eval[order[q]].features[f] <= v; ++q) {
              const std::size_t cell = stats.cell_of_point(order[q]);
              const ClassLabel label = eval[order[q]].label;
              const auto before_l = detail::score_counts(side(left, cell));
              const auto before_r = detail::score_counts(side(right, cell));
              ++left[cell * classes + label];
              --right[cell * classes + label];
              const auto after_l = detail::score_counts(side(left, cell));
              const auto after_r = detail::score_counts(side(right, cell));
              misclassified = misclassified + after_l.misclassified + after_r.misclassified -
                              before_l.misclassified - before_r.misclassified;
              purity = purity + after_l.purity + after_r.purity - before_l.purity - before_r.purity;
            }
            ++evaluated;
            const Choice candidate{misclassified, purity, f, v};
            if (!best || std::tie(candidate.misclassified, candidate.purity, candidate.feature,
                                  candidate.value) <
                             std::tie(best->misclassified, best->purity, best->feature, best->value)) {
              best = candidate;
            }
          }
          for (std::size_t cell : touched_cells) {
            touched[cell] = 0;
            std::fill_n(left.begin() + cell * classes, classes, 0);
            std::copy_n(stats.counts(cell).begin(), classes, right.begin() + cell * classes);
          }
        }
        point = point_end;
        value = value_end;
      }
    }

    if (!best) break;
    quantizer = quantizer.with_boundary(best->feature, best->value);
    const CellStatistics after(quantizer, dataset);
    GbiStep step;
    step.feature = best->feature;
    step.value = best->value;
    step.misclassified = after.misclassified();
    step.loss = static_cast<double>(step.misclassified) / static_cast<double>(total);
    step.purity = static_cast<double>(detail::purity_sum(after)) / static_cast<double>(total);
    step.candidates_evaluated = evaluated;
    trace.steps.push_back(step);
  }
  return {std::move(quantizer), std::move(trace)};
}

}  // namespace dquant
