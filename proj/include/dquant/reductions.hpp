#pragma once

#include <dquant/dataset.hpp>
#include <dquant/error.hpp>
#include <dquant/graph.hpp>
#include <dquant/oracle.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dquant {

// ----------------------------------------------------------------------------
// Vertex colouring

// |E| x |V| 0/1 matrices. Row k marks the larger endpoint of edge k in f0 and
// the smaller one in f1.
struct IncidencePair {
  std::vector<std::vector<std::uint32_t>> f0;
  std::vector<std::vector<std::uint32_t>> f1;

  friend bool operator==(const IncidencePair&, const IncidencePair&) = default;
};

inline IncidencePair incidence_matrices(const UndirectedGraph& graph) {
  IncidencePair pair;
  for (const auto& [q1, q2] : graph.edges()) {
    std::vector<std::uint32_t> row0(graph.vertex_count(), 0);
    std::vector<std::uint32_t> row1(graph.vertex_count(), 0);
    row0[q1 - 1] = 1;
    row1[q2 - 1] = 1;
    pair.f0.push_back(std::move(row0));
    pair.f1.push_back(std::move(row1));
  }
  return pair;
}

struct MergeResult {
  IncidencePair merged;  // one column per group, in grouping order
  bool valid = true;
  std::vector<std::size_t> violating_rows;  // 0-based
};

// Replaces the columns of each group by their sum, in both matrices. Valid
// when no merged row has a nonzero entry at the same column in f0 and f1.
// `grouping` lists 1-based vertex indices and must partition 1..|V|.
inline MergeResult merge_columns(const IncidencePair& pair,
                                 const std::vector<std::vector<std::uint32_t>>& grouping) {
  const std::size_t vertices = pair.f0.empty() ? 0 : pair.f0.front().size();
  std::size_t covered = 0;
  std::vector<char> seen(vertices + 1, 0);
  for (const auto& group : grouping) {
    if (group.empty()) throw InvalidArgument("grouping contains an empty group");
    for (std::uint32_t v : group) {
      if (v < 1 || v > vertices) throw InvalidArgument("vertex " + std::to_string(v) + " out of range");
      if (seen[v]) throw InvalidArgument("vertex " + std::to_string(v) + " appears in two groups");
      seen[v] = 1;
      ++covered;
    }
  }
  if (covered != vertices) throw InvalidArgument("grouping does not cover every vertex");

  MergeResult result;
  auto merge = [&](const std::vector<std::vector<std::uint32_t>>& matrix) {
    std::vector<std::vector<std::uint32_t>> out;
    for (const auto& row : matrix) {
      std::vector<std::uint32_t> merged_row;
      for (const auto& group : grouping) {
        std::uint32_t sum = 0;
        for (std::uint32_t v : group) sum += row[v - 1];
        merged_row.push_back(sum);
      }
      out.push_back(std::move(merged_row));
    }
    return out;
  };
  result.merged.f0 = merge(pair.f0);
  result.merged.f1 = merge(pair.f1);
  for (std::size_t k = 0; k < result.merged.f0.size(); ++k) {
    for (std::size_t q = 0; q < grouping.size(); ++q) {
      if (result.merged.f0[k][q] != 0 && result.merged.f1[k][q] != 0) {
        result.violating_rows.push_back(k);
        break;
      }
    }
  }
  result.valid = result.violating_rows.empty();
  return result;
}

enum class RowPolicy {
  // x2 = (q1 + q2) / 2 exactly. Edges with equal q1 + q2 share a row.
  kMidpoint,
  // As kMidpoint, but the j-th repeat of a midpoint (j = 0, 1, ...) moves up
  // by j / (2 (|E| + 1)), so every edge gets its own row.
  kDistinctRows,
};

// Edge (q1, q2) contributes a class-0 point at (q1, x2) and a class-1 point
// at (q2, x2). Throws for graphs without edges (the dataset would be empty).
inline LabeledDataset coloring_dataset(const UndirectedGraph& graph,
                                       RowPolicy policy = RowPolicy::kDistinctRows) {
  if (graph.edge_count() == 0) throw InvalidArgument("colouring dataset needs at least one edge");
  const double step = 1.0 / (2.0 * static_cast<double>(graph.edge_count() + 1));
  std::map<std::uint32_t, std::size_t> repeats;  // keyed by q1 + q2
  std::vector<LabeledPoint> points;
  for (const auto& [q1, q2] : graph.edges()) {
    double row = (static_cast<double>(q1) + static_cast<double>(q2)) / 2.0;
    const std::size_t j = repeats[q1 + q2]++;
    if (policy == RowPolicy::kDistinctRows) row += static_cast<double>(j) * step;
    points.push_back({{static_cast<double>(q1), row}, 0});
    points.push_back({{static_cast<double>(q2), row}, 1});
  }
  return LabeledDataset(2, 2, std::move(points));
}

struct ColoringCheck {
  std::uint32_t chromatic = 0;
  std::size_t min_bins = 0;
  bool equal = false;
};

// chromatic_number(G) against min_bins_coloring_side on the reduction with
// r = |V|. A graph without edges needs one bin.
inline ColoringCheck verify_coloring_equivalence(const UndirectedGraph& graph, const SearchBudget& budget = {},
                                                 RowPolicy policy = RowPolicy::kDistinctRows) {
  ColoringCheck check;
  check.chromatic = chromatic_number(graph, budget);
  if (graph.edge_count() == 0) {
    check.min_bins = graph.vertex_count() == 0 ? 0 : 1;
  } else {
    check.min_bins = min_bins_coloring_side(coloring_dataset(graph, policy), graph.vertex_count(), budget);
  }
  check.equal = check.chromatic == check.min_bins;
  return check;
}

// ----------------------------------------------------------------------------
// Balanced complete bipartite subgraph

// Points for the vertex pair (v1, v2), 1-based, in the 3x3 block with corner
// (3 v1, 3 v2).
inline std::vector<LabeledPoint> bcbs_gadget(std::uint32_t v1, std::uint32_t v2, bool is_edge) {
  if (v1 < 1 || v2 < 1) throw InvalidArgument("gadget indices are 1-based");
  const double a = 3.0 * v1;
  const double b = 3.0 * v2;
  if (is_edge) {
    return {{{a, b}, 1},         {{a + 1, b + 1}, 1}, {{a + 2, b}, 0},
            {{a + 2, b + 1}, 0}, {{a, b + 2}, 0},     {{a + 1, b + 2}, 0}};
  }
  return {{{a, b}, 0}, {{a + 1, b + 1}, 1}};
}

enum class BcbsLayout {
  // Gadgets for every vertex pair, plus a separator row at x2 = 3|V1| + 3 and
  // a separator column at x1 = 3|V1| + 3 carrying classes 0, 0, 1 against
  // each 3-block. The separators forbid every zero-loss merge except
  // {3v, 3v+1}, so min bins = 3|V1| - (max balanced biclique).
  kSeparated,
  // Gadgets for the pairs among nonzero-degree vertices, plus a
  // checkerboard block of 3|V1^0| x 3|V2^0| points for the zero-degree
  // vertices (V1^0, V2^0), placed 3 units past the largest gadget coordinate.
  kLiteral,
};

inline LabeledDataset bcbs_dataset(const BipartiteGraph& graph, BcbsLayout layout = BcbsLayout::kSeparated) {
  const std::uint32_t side = graph.side();
  if (side == 0) throw InvalidArgument("BCBS dataset needs a nonempty graph");
  std::vector<LabeledPoint> points;
  auto add_gadget = [&](std::uint32_t v1, std::uint32_t v2) {
    for (auto& p : bcbs_gadget(v1, v2, graph.has_edge(v1, v2))) points.push_back(std::move(p));
  };

  if (layout == BcbsLayout::kSeparated) {
    for (std::uint32_t v1 = 1; v1 <= side; ++v1) {
      for (std::uint32_t v2 = 1; v2 <= side; ++v2) add_gadget(v1, v2);
    }
    const double separator = 3.0 * side + 3.0;
    for (std::uint32_t v = 1; v <= side; ++v) {
      for (std::uint32_t offset = 0; offset < 3; ++offset) {
        const double at = 3.0 * v + offset;
        const ClassLabel label = offset == 2 ? 1 : 0;
        points.push_back({{at, separator}, label});
        points.push_back({{separator, at}, label});
      }
    }
    return LabeledDataset(2, 2, std::move(points));
  }

  std::vector<char> used1(side + 1, 0);
  std::vector<char> used2(side + 1, 0);
  for (const auto& [v1, v2] : graph.edges()) {
    used1[v1] = 1;
    used2[v2] = 1;
  }
  double largest = 0.0;
  std::size_t zero1 = 0;
  std::size_t zero2 = 0;
  for (std::uint32_t v = 1; v <= side; ++v) {
    if (!used1[v]) ++zero1;
    if (!used2[v]) ++zero2;
  }
  for (std::uint32_t v1 = 1; v1 <= side; ++v1) {
    if (!used1[v1]) continue;
    for (std::uint32_t v2 = 1; v2 <= side; ++v2) {
      if (!used2[v2]) continue;
      add_gadget(v1, v2);
      largest = std::max({largest, 3.0 * v1 + 2, 3.0 * v2 + 2});
    }
  }
  const double base = largest + 3.0;
  for (std::size_t i = 0; i < 3 * zero1; ++i) {
    for (std::size_t j = 0; j < 3 * zero2; ++j) {
      points.push_back({{base + static_cast<double>(i), base + static_cast<double>(j)},
                        static_cast<ClassLabel>((i + j) % 2)});
    }
  }
  if (points.empty()) throw InvalidArgument("literal BCBS layout is empty for this graph");
  return LabeledDataset(2, 2, std::move(points));
}

struct BcbsCheck {
  std::uint32_t biclique = 0;
  std::size_t min_bins = 0;
  bool equal = false;
};

// max_balanced_biclique(G) against 3|V1| - min_bins_bcbs_side of the reduction.
inline BcbsCheck verify_bcbs_equivalence(const BipartiteGraph& graph, const SearchBudget& budget = {},
                                         BcbsLayout layout = BcbsLayout::kSeparated) {
  BcbsCheck check;
  check.biclique = max_balanced_biclique(graph, budget);
  check.min_bins = min_bins_bcbs_side(bcbs_dataset(graph, layout), budget);
  check.equal = static_cast<std::int64_t>(3 * graph.side()) - static_cast<std::int64_t>(check.min_bins) ==
                static_cast<std::int64_t>(check.biclique);
  return check;
}

// ----------------------------------------------------------------------------
// Lifting to a linearly separable problem

// Appends x3 = -1 for class 0 and x3 = +1 for class 1.
inline LabeledDataset lift_linear_3d(const LabeledDataset& dataset) {
  if (dataset.n() != 2) throw DimensionError("lift needs n = 2");
  if (dataset.num_classes() > 2) throw InvalidArgument("lift needs at most two classes");
  std::vector<LabeledPoint> points;
  points.reserve(dataset.size());
  for (const auto& p : dataset) {
    points.push_back({{p.features[0], p.features[1], p.label == 0 ? -1.0 : 1.0}, p.label});
  }
  return LabeledDataset(3, dataset.num_classes(), std::move(points));
}

}  // namespace dquant
