#pragma once

#include <dquant/dataset.hpp>
#include <dquant/error.hpp>
#include <dquant/graph.hpp>
#include <dquant/online_dp.hpp>
#include <dquant/quantcore.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dquant {

// Cap on the number of configurations an exhaustive search may enumerate.
// Every search computes its state count up front and throws BudgetExceeded
// before enumerating anything.
struct SearchBudget {
  std::uint64_t max_states = 1'000'000;

  void require(std::uint64_t states, const std::string& what) const {
    if (max_states == 0) throw InvalidArgument("search budget must be positive");
    if (states > max_states) {
      throw BudgetExceeded(what + " needs " +
                           (states == UINT64_MAX ? std::string("more than 2^64") : std::to_string(states)) +
                           " states, budget is " + std::to_string(max_states));
    }
  }
};

namespace detail {

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    const std::uint64_t factor = n - k + i;
    if (result > UINT64_MAX / factor) return UINT64_MAX;
    result = result * factor / i;
  }
  return result;
}

inline std::vector<double> distinct_values(const LabeledDataset& dataset, std::size_t feature) {
  std::vector<double> values;
  values.reserve(dataset.size());
  for (const auto& p : dataset) values.push_back(p.features[feature]);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

inline std::size_t rank_of(const std::vector<double>& sorted, double v) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

}  // namespace detail

// ----------------------------------------------------------------------------
// Common-boundary quantizer by exhaustive subset search

// Exact minimum over every set of at most 2^R - 1 candidate values used as
// boundaries on both features. Ties keep the first subset in enumeration
// order (by size, then lexicographically by candidate index).
inline OnlineSolution brute_force_online(const LabeledDataset& dataset, std::uint32_t rate,
                                         const SearchBudget& budget = {}) {
  if (rate == 0) throw InvalidArgument("rate must be positive");
  require_diagonal_separable(dataset);
  const std::vector<double> candidates = candidate_boundaries(dataset);
  const std::size_t m = candidates.size();
  const std::size_t max_size =
      static_cast<std::size_t>(std::min<std::uint64_t>(max_common_boundaries(rate), m));

  std::uint64_t states = 0;
  for (std::size_t k = 0; k <= max_size; ++k) {
    states = detail::saturating_add(states, detail::binomial(m, k));
  }
  budget.require(states, "common-boundary search");

  std::vector<std::size_t> rank1(dataset.size());
  std::vector<std::size_t> rank2(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    rank1[i] = detail::rank_of(candidates, dataset[i].features[0]);
    rank2[i] = detail::rank_of(candidates, dataset[i].features[1]);
  }
  const std::size_t classes = dataset.num_classes();

  std::vector<std::size_t> chosen;
  std::vector<std::size_t> below(m + 1);  // below[r] = #{chosen c : c < r}
  std::vector<std::size_t> cells;
  std::optional<std::size_t> best;
  std::vector<std::size_t> best_subset;

  auto evaluate = [&]() {
    std::fill(below.begin(), below.end(), 0);
    for (std::size_t c : chosen) ++below[c + 1];
    for (std::size_t r = 1; r <= m; ++r) below[r] += below[r - 1];
    const std::size_t bins = chosen.size() + 1;
    cells.assign(bins * bins * classes, 0);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      ++cells[(below[rank1[i]] * bins + below[rank2[i]]) * classes + dataset[i].label];
    }
    std::size_t wrong = 0;
    for (std::size_t cell = 0; cell < bins * bins; ++cell) {
      const auto first = cells.begin() + static_cast<std::ptrdiff_t>(cell * classes);
      std::size_t size = 0;
      std::size_t top = 0;
      for (auto it = first; it != first + static_cast<std::ptrdiff_t>(classes); ++it) {
        size += *it;
        top = std::max(top, *it);
      }
      wrong += size - top;
    }
    if (!best || wrong < *best) {
      best = wrong;
      best_subset = chosen;
    }
  };

  std::function<void(std::size_t, std::size_t)> extend = [&](std::size_t start, std::size_t remaining) {
    if (remaining == 0) {
      evaluate();
      return;
    }
    for (std::size_t c = start; c + remaining <= m; ++c) {
      chosen.push_back(c);
      extend(c + 1, remaining - 1);
      chosen.pop_back();
    }
  };
  for (std::size_t k = 0; k <= max_size; ++k) extend(0, k);

  OnlineSolution solution;
  for (std::size_t c : best_subset) solution.boundaries.push_back(candidates[c]);
  solution.misclassified = *best;
  solution.point_count = dataset.size();
  solution.loss = static_cast<double>(*best) / static_cast<double>(dataset.size());
  return solution;
}

// ----------------------------------------------------------------------------
// Distributed grid quantizer by exhaustive search

struct GridSearchResult {
  GridQuantizer quantizer;
  std::size_t misclassified = 0;
  double loss = 0.0;
};

namespace detail {

// Number of per-feature subset choices for one node whose bin product stays
// within `capacity`.
inline std::uint64_t count_node_options(std::span<const std::size_t> sizes, std::uint64_t capacity) {
  if (sizes.empty()) return 1;
  std::uint64_t total = 0;
  const std::size_t m = sizes.front();
  for (std::size_t s = 0; s <= m && s + 1 <= capacity; ++s) {
    const std::uint64_t sub = count_node_options(sizes.subspan(1), capacity / (s + 1));
    total = saturating_add(total, saturating_mul(binomial(m, s), sub));
  }
  return total;
}

}  // namespace detail

// Exact minimum of the majority-decoder misclassified count over every
// per-feature boundary set drawn from the training values that keeps each
// node within its bin budget. Ties keep the first configuration enumerated.
inline GridSearchResult brute_force_grid(const LabeledDataset& dataset, const FeaturePartition& partition,
                                         const SearchBudget& budget = {}) {
  if (dataset.n() != partition.n()) {
    throw DimensionError("dataset has " + std::to_string(dataset.n()) + " features, partition covers " +
                         std::to_string(partition.n()));
  }
  const std::size_t n = dataset.n();
  std::vector<std::vector<double>> values(n);
  for (std::size_t f = 0; f < n; ++f) values[f] = detail::distinct_values(dataset, f);

  std::uint64_t states = 1;
  for (std::size_t k = 0; k < partition.node_count(); ++k) {
    if (partition.rate(k).is_unbounded()) {
      throw InvalidArgument("grid search needs finite rates; node " + std::to_string(k) + " is unbounded");
    }
    std::vector<std::size_t> sizes;
    for (std::size_t f : partition.group(k)) sizes.push_back(values[f].size());
    states = detail::saturating_mul(
        states, detail::count_node_options(sizes, partition.rate(k).bin_capacity()));
  }
  budget.require(states, "grid search");

  // All subsets of values[f] of each size, in lexicographic index order.
  std::vector<std::vector<double>> current(n);
  std::optional<std::size_t> best;
  std::vector<std::vector<double>> best_boundaries(n);

  std::function<void(std::size_t, std::size_t, std::uint64_t)> per_feature;
  std::function<void(std::size_t)> per_node;

  per_node = [&](std::size_t k) {
    if (k == partition.node_count()) {
      const std::size_t wrong = optimal_misclassified(GridQuantizer(partition, current), dataset);
      if (!best || wrong < *best) {
        best = wrong;
        best_boundaries = current;
      }
      return;
    }
    per_feature(k, 0, partition.rate(k).bin_capacity());
  };

  per_feature = [&](std::size_t k, std::size_t position, std::uint64_t capacity) {
    const auto& group = partition.group(k);
    if (position == group.size()) {
      per_node(k + 1);
      return;
    }
    const std::size_t f = group[position];
    const std::size_t m = values[f].size();
    std::vector<std::size_t> pick;
    std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t start, std::size_t remaining) {
      if (remaining == 0) {
        current[f].clear();
        for (std::size_t c : pick) current[f].push_back(values[f][c]);
        per_feature(k, position + 1, capacity / (pick.size() + 1));
        return;
      }
      for (std::size_t c = start; c + remaining <= m; ++c) {
        pick.push_back(c);
        choose(c + 1, remaining - 1);
        pick.pop_back();
      }
    };
    for (std::size_t s = 0; s <= m && s + 1 <= capacity; ++s) choose(0, s);
    current[f].clear();
  };

  per_node(0);
  GridQuantizer quantizer(partition, best_boundaries);
  return {std::move(quantizer), *best, static_cast<double>(*best) / static_cast<double>(dataset.size())};
}

// ----------------------------------------------------------------------------
// Graph problems

// Fewest colours in a proper vertex colouring. Backtracking in vertex order;
// vertex v may only open colour (highest used + 1), which removes colour
// permutations. Every visited node counts as a state.
inline std::uint32_t chromatic_number(const UndirectedGraph& graph, const SearchBudget& budget = {}) {
  const std::uint32_t v_count = graph.vertex_count();
  if (v_count == 0) return 0;
  std::vector<std::vector<std::uint32_t>> lower_neighbours(v_count);
  for (const auto& [q1, q2] : graph.edges()) lower_neighbours[q1 - 1].push_back(q2 - 1);

  std::vector<std::uint32_t> colour(v_count, 0);
  std::uint64_t visited = 0;

  std::function<bool(std::uint32_t, std::uint32_t, std::uint32_t)> place =
      [&](std::uint32_t v, std::uint32_t used, std::uint32_t limit) -> bool {
    if (v == v_count) return true;
    for (std::uint32_t c = 0; c < std::min(used + 1, limit); ++c) {
      budget.require(++visited, "colouring search");
      bool ok = true;
      for (std::uint32_t u : lower_neighbours[v]) {
        if (colour[u] == c) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      colour[v] = c;
      if (place(v + 1, std::max(used, c + 1), limit)) return true;
    }
    return false;
  };

  for (std::uint32_t k = 1; k <= v_count; ++k) {
    if (place(0, 0, k)) return k;
  }
  return v_count;
}

// Largest W with W vertices of V1 and W of V2 pairwise joined. For each
// subset S of V1 the best partner set is its common neighbourhood, so the
// search covers the 2^side subsets of V1.
inline std::uint32_t max_balanced_biclique(const BipartiteGraph& graph, const SearchBudget& budget = {}) {
  const std::uint32_t side = graph.side();
  if (side >= 63) throw BudgetExceeded("biclique search over more than 2^63 subsets");
  budget.require(std::uint64_t{1} << side, "biclique search");
  std::vector<std::uint64_t> neighbours(side, 0);
  for (const auto& [v1, v2] : graph.edges()) neighbours[v1 - 1] |= std::uint64_t{1} << (v2 - 1);
  const std::uint64_t all = side == 0 ? 0 : (std::uint64_t{1} << side) - 1;
  std::uint32_t best = 0;
  for (std::uint64_t mask = 1; mask <= all; ++mask) {
    std::uint64_t common = all;
    for (std::uint32_t v = 0; v < side; ++v) {
      if (mask >> v & 1) common &= neighbours[v];
    }
    best = std::max(best, static_cast<std::uint32_t>(
                              std::min(std::popcount(mask), std::popcount(common))));
  }
  return best;
}

// ----------------------------------------------------------------------------
// Minimum bins on the reduction datasets

namespace detail {

inline std::uint64_t bell_number(std::size_t m) {
  // Bell triangle with saturation.
  std::vector<std::uint64_t> row{1};
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t x : row) next.push_back(saturating_add(next.back(), x));
    row = std::move(next);
  }
  return row.front();
}

}  // namespace detail

// Fewest groups in a partition of the distinct x1 values such that the cells
// (group of x1, x2) are all single-class, i.e. the misclassified count is
// below one half, with every group made of at most r runs of consecutive x1
// values. x2 is left unquantized. Groupings are enumerated as
// restricted-growth strings.
inline std::size_t min_bins_coloring_side(const LabeledDataset& dataset, std::size_t r,
                                          const SearchBudget& budget = {}) {
  if (dataset.n() != 2) throw DimensionError("colouring-side search needs n = 2");
  if (r == 0) throw InvalidArgument("r must be positive");
  const std::vector<double> xs = detail::distinct_values(dataset, 0);
  const std::vector<double> ys = detail::distinct_values(dataset, 1);
  const std::size_t m = xs.size();
  budget.require(detail::bell_number(m), "grouping search");

  struct Point {
    std::size_t x;
    std::size_t y;
    ClassLabel label;
  };
  std::vector<Point> points;
  for (const auto& p : dataset) {
    points.push_back({detail::rank_of(xs, p.features[0]), detail::rank_of(ys, p.features[1]), p.label});
  }

  std::vector<std::size_t> group(m, 0);
  std::optional<std::size_t> best;
  constexpr ClassLabel kEmpty = std::numeric_limits<ClassLabel>::max();
  std::vector<ClassLabel> cell_class;

  auto feasible = [&](std::size_t groups) {
    std::vector<std::size_t> runs(groups, 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (i == 0 || group[i] != group[i - 1]) ++runs[group[i]];
    }
    for (std::size_t g = 0; g < groups; ++g) {
      if (runs[g] > r) return false;
    }
    cell_class.assign(groups * ys.size(), kEmpty);
    for (const auto& p : points) {
      auto& c = cell_class[group[p.x] * ys.size() + p.y];
      if (c == kEmpty) c = p.label;
      else if (c != p.label) return false;
    }
    return true;
  };

  std::function<void(std::size_t, std::size_t)> assign = [&](std::size_t i, std::size_t groups) {
    if (best && groups >= *best) return;
    if (i == m) {
      if (feasible(groups)) best = groups;
      return;
    }
    for (std::size_t g = 0; g <= groups; ++g) {
      group[i] = g;
      assign(i + 1, std::max(groups, g + 1));
    }
  };
  assign(0, 0);
  if (!best) throw InvalidArgument("no grouping separates the classes; the dataset has conflicting points");
  return *best;
}

// Fewest bins m such that some split of the distinct x1 values into at most
// m runs and of the distinct x2 values into at most m runs gives single-class
// cells. Column splits are enumerated; for each, rows are merged greedily,
// which is optimal because a mergeable run stays mergeable when shortened.
inline std::size_t min_bins_bcbs_side(const LabeledDataset& dataset, const SearchBudget& budget = {}) {
  if (dataset.n() != 2) throw DimensionError("BCBS-side search needs n = 2");
  const std::vector<double> xs = detail::distinct_values(dataset, 0);
  const std::vector<double> ys = detail::distinct_values(dataset, 1);
  const std::size_t columns = xs.size();
  if (columns - 1 >= 63) throw BudgetExceeded("column split search over more than 2^63 splits");
  budget.require(std::uint64_t{1} << (columns - 1), "column split search");

  // by_row[y] = (column rank, label) of every point in that row.
  std::vector<std::vector<std::pair<std::size_t, ClassLabel>>> by_row(ys.size());
  for (const auto& p : dataset) {
    by_row[detail::rank_of(ys, p.features[1])].emplace_back(detail::rank_of(xs, p.features[0]), p.label);
  }

  constexpr ClassLabel kEmpty = std::numeric_limits<ClassLabel>::max();
  std::vector<std::size_t> column_group(columns);
  std::optional<std::size_t> best;
  std::vector<ClassLabel> row_cells;
  std::vector<ClassLabel> merged;

  for (std::uint64_t cuts = 0; cuts < (std::uint64_t{1} << (columns - 1)); ++cuts) {
    column_group[0] = 0;
    for (std::size_t c = 1; c < columns; ++c) column_group[c] = column_group[c - 1] + ((cuts >> (c - 1)) & 1);
    const std::size_t groups = column_group[columns - 1] + 1;
    if (best && groups >= *best) continue;

    bool ok = true;
    std::size_t row_groups = 0;
    merged.assign(groups, kEmpty);
    for (std::size_t y = 0; y < ys.size() && ok; ++y) {
      row_cells.assign(groups, kEmpty);
      for (auto [c, label] : by_row[y]) {
        auto& cell = row_cells[column_group[c]];
        if (cell == kEmpty) cell = label;
        else if (cell != label) ok = false;
      }
      if (!ok) break;
      bool joins = row_groups > 0;
      for (std::size_t g = 0; g < groups && joins; ++g) {
        if (row_cells[g] != kEmpty && merged[g] != kEmpty && merged[g] != row_cells[g]) joins = false;
      }
      if (joins) {
        for (std::size_t g = 0; g < groups; ++g) {
          if (row_cells[g] != kEmpty) merged[g] = row_cells[g];
        }
      } else {
        ++row_groups;
        merged = row_cells;
      }
    }
    if (!ok) continue;
    const std::size_t bins = std::max(groups, row_groups);
    if (!best || bins < *best) best = bins;
  }
  if (!best) throw InvalidArgument("no split separates the classes; the dataset has conflicting points");
  return *best;
}

// ----------------------------------------------------------------------------
// Over-fitting scheme

// Node 0 sends the label of the nearest training projection onto its own
// features; the other nodes send nothing. Zero training loss, but the
// regions are arbitrary Voronoi cells rather than grid bins.
struct OverfitSystem {
  std::vector<std::size_t> features;        // node 0's group
  std::vector<std::vector<double>> sites;   // training projections
  std::vector<ClassLabel> labels;
  std::uint32_t bits = 0;                    // ceil(log2 |Y|) at node 0
  std::size_t misclassified = 0;
  double loss = 0.0;

  // Nearest site in squared Euclidean distance; ties go to the lower index.
  ClassLabel classify(std::span<const double> point) const {
    std::size_t best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < sites.size(); ++s) {
      double distance = 0.0;
      for (std::size_t j = 0; j < features.size(); ++j) {
        const double diff = point[features[j]] - sites[s][j];
        distance += diff * diff;
      }
      if (distance < best_distance) {
        best_distance = distance;
        best = s;
      }
    }
    return labels[best];
  }
};

inline std::uint32_t ceil_log2(std::uint64_t value) {
  return value <= 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(value - 1));
}

inline OverfitSystem overfit_system(const LabeledDataset& dataset, const FeaturePartition& partition) {
  if (dataset.n() != partition.n()) {
    throw DimensionError("dataset has " + std::to_string(dataset.n()) + " features, partition covers " +
                         std::to_string(partition.n()));
  }
  OverfitSystem system;
  system.features = partition.group(0);
  std::map<std::vector<double>, ClassLabel> seen;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::vector<double> projection;
    for (std::size_t f : system.features) projection.push_back(dataset[i].features[f]);
    auto [it, inserted] = seen.emplace(projection, dataset[i].label);
    if (!inserted) {
      if (it->second != dataset[i].label) {
        throw DuplicateProjection("point " + std::to_string(i) +
                                  " shares its node-0 projection with a point of another class");
      }
      continue;
    }
    system.sites.push_back(std::move(projection));
    system.labels.push_back(dataset[i].label);
  }
  system.bits = ceil_log2(dataset.num_classes());
  for (const auto& p : dataset) {
    if (system.classify(p.features) != p.label) ++system.misclassified;
  }
  system.loss = static_cast<double>(system.misclassified) / static_cast<double>(dataset.size());
  return system;
}

}  // namespace dquant
