#pragma once

#include <dquant/error.hpp>

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dquant {

// Simple graph on vertices 1..vertex_count. Edges are stored as (q1, q2)
// with q1 > q2, in insertion order (the incidence-matrix row order).
class UndirectedGraph {
 public:
  using Edge = std::pair<std::uint32_t, std::uint32_t>;

  explicit UndirectedGraph(std::uint32_t vertex_count, std::vector<Edge> edges = {})
      : vertex_count_(vertex_count), edges_(std::move(edges)) {
    std::set<Edge> seen;
    for (const auto& [q1, q2] : edges_) {
      if (q1 == q2) throw InvalidArgument("self-loop on vertex " + std::to_string(q1));
      if (q1 < q2) {
        throw InvalidArgument("edge (" + std::to_string(q1) + ", " + std::to_string(q2) +
                              ") must be stored with q1 > q2");
      }
      if (q2 < 1 || q1 > vertex_count_) {
        throw InvalidArgument("edge (" + std::to_string(q1) + ", " + std::to_string(q2) +
                              ") leaves the vertex range 1.." + std::to_string(vertex_count_));
      }
      if (!seen.insert({q1, q2}).second) {
        throw InvalidArgument("duplicate edge (" + std::to_string(q1) + ", " + std::to_string(q2) + ")");
      }
    }
  }

  // Accepts pairs in either orientation; drops repeats, keeps first-seen order.
  static UndirectedGraph from_unordered(std::uint32_t vertex_count, const std::vector<Edge>& pairs) {
    std::vector<Edge> edges;
    std::set<Edge> seen;
    for (auto [a, b] : pairs) {
      const Edge e{std::max(a, b), std::min(a, b)};
      if (seen.insert(e).second) edges.push_back(e);
    }
    return UndirectedGraph(vertex_count, std::move(edges));
  }

  std::uint32_t vertex_count() const noexcept { return vertex_count_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  bool adjacent(std::uint32_t a, std::uint32_t b) const {
    const Edge e{std::max(a, b), std::min(a, b)};
    return std::find(edges_.begin(), edges_.end(), e) != edges_.end();
  }

  friend bool operator==(const UndirectedGraph&, const UndirectedGraph&) = default;

 private:
  std::uint32_t vertex_count_;
  std::vector<Edge> edges_;
};

// Balanced bipartite graph with sides V1 = V2 = 1..side. An edge (v1, v2)
// joins v1 in V1 to v2 in V2.
class BipartiteGraph {
 public:
  using Edge = std::pair<std::uint32_t, std::uint32_t>;

  explicit BipartiteGraph(std::uint32_t side, std::set<Edge> edges = {})
      : side_(side), edges_(std::move(edges)) {
    for (const auto& [v1, v2] : edges_) {
      if (v1 < 1 || v1 > side_ || v2 < 1 || v2 > side_) {
        throw InvalidArgument("edge (" + std::to_string(v1) + ", " + std::to_string(v2) +
                              ") leaves the side range 1.." + std::to_string(side_));
      }
    }
  }

  static BipartiteGraph complete(std::uint32_t side) {
    std::set<Edge> edges;
    for (std::uint32_t a = 1; a <= side; ++a) {
      for (std::uint32_t b = 1; b <= side; ++b) edges.insert({a, b});
    }
    return BipartiteGraph(side, std::move(edges));
  }

  std::uint32_t side() const noexcept { return side_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  bool has_edge(std::uint32_t v1, std::uint32_t v2) const { return edges_.count({v1, v2}) > 0; }

  friend bool operator==(const BipartiteGraph&, const BipartiteGraph&) = default;

 private:
  std::uint32_t side_;
  std::set<Edge> edges_;
};

}  // namespace dquant
