#pragma once

#include <dquant/dataset.hpp>
#include <dquant/error.hpp>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dquant {

namespace detail {

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return b > UINT64_MAX - a ? UINT64_MAX : a + b;
}

}  // namespace detail

// Number of boundaries strictly below `value`. A value sitting exactly on a
// boundary belongs to the bin whose upper edge is that boundary.
inline std::size_t interval_index(double value, std::span<const double> boundaries) {
  return static_cast<std::size_t>(
      std::lower_bound(boundaries.begin(), boundaries.end(), value) - boundaries.begin());
}

// Joint cell: for each node, the interval index of each of its features (in
// group order).
struct CellKey {
  std::vector<std::vector<std::uint32_t>> nodes;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

// Rectangular-grid distributed encoder: per-feature sorted boundaries, grouped
// into nodes by a FeaturePartition, with every finite-rate node holding at
// most 2^R_k bins.
class GridQuantizer {
 public:
  explicit GridQuantizer(FeaturePartition partition)
      : GridQuantizer(partition, std::vector<std::vector<double>>(partition.n())) {}

  GridQuantizer(FeaturePartition partition, std::vector<std::vector<double>> boundaries)
      : partition_(std::move(partition)), boundaries_(std::move(boundaries)) {
    if (boundaries_.size() != partition_.n()) {
      throw DimensionError("quantizer has boundaries for " + std::to_string(boundaries_.size()) +
                           " features, partition covers " + std::to_string(partition_.n()));
    }
    for (std::size_t f = 0; f < boundaries_.size(); ++f) {
      const auto& d = boundaries_[f];
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (!std::isfinite(d[j])) {
          throw InvalidArgument("feature " + std::to_string(f) + " has a non-finite boundary");
        }
        if (j > 0 && !(d[j - 1] < d[j])) {
          throw InvalidArgument("boundaries of feature " + std::to_string(f) +
                                " are not strictly increasing");
        }
      }
    }
    for (std::size_t k = 0; k < partition_.node_count(); ++k) {
      if (!partition_.rate(k).admits(bin_count(k))) {
        throw InvalidArgument("node " + std::to_string(k) + " uses " +
                              std::to_string(bin_count(k)) + " bins, over its budget of " +
                              std::to_string(partition_.rate(k).bin_capacity()));
      }
    }
  }

  const FeaturePartition& partition() const noexcept { return partition_; }
  std::size_t n() const noexcept { return partition_.n(); }
  const std::vector<double>& boundaries(std::size_t feature) const {
    return boundaries_.at(feature);
  }
  const std::vector<std::vector<double>>& all_boundaries() const noexcept { return boundaries_; }

  // B_k = prod over f in group k of (|d_f| + 1); saturates at UINT64_MAX.
  std::uint64_t bin_count(std::size_t node) const {
    std::uint64_t bins = 1;
    for (std::size_t f : partition_.group(node)) {
      bins = detail::saturating_mul(bins, boundaries_[f].size() + 1);
    }
    return bins;
  }

  // Increase of B_k if one more boundary lands on `feature`:
  // prod over the other features g of the node of (|d_g| + 1).
  std::uint64_t delta_bins(std::size_t feature) const {
    const std::size_t node = partition_.node_of(feature);
    std::uint64_t delta = 1;
    for (std::size_t g : partition_.group(node)) {
      if (g != feature) delta = detail::saturating_mul(delta, boundaries_[g].size() + 1);
    }
    return delta;
  }

  // Whether the node owning `feature` can afford one more boundary there.
  bool can_split(std::size_t feature) const {
    const std::size_t node = partition_.node_of(feature);
    return partition_.rate(node).admits(
        detail::saturating_add(bin_count(node), delta_bins(feature)));
  }

  bool has_boundary(std::size_t feature, double value) const {
    const auto& d = boundaries_.at(feature);
    return std::binary_search(d.begin(), d.end(), value);
  }

  GridQuantizer with_boundary(std::size_t feature, double value) const {
    if (feature >= n()) throw InvalidArgument("feature " + std::to_string(feature) + " out of range");
    if (has_boundary(feature, value)) {
      throw InvalidArgument("feature " + std::to_string(feature) + " already has that boundary");
    }
    auto boundaries = boundaries_;
    auto& d = boundaries[feature];
    d.insert(std::lower_bound(d.begin(), d.end(), value), value);
    return GridQuantizer(partition_, std::move(boundaries));
  }

  std::size_t total_boundaries() const noexcept {
    std::size_t total = 0;
    for (const auto& d : boundaries_) total += d.size();
    return total;
  }

  // Interval index of every feature, in feature order.
  void interval_indices(std::span<const double> point, std::span<std::uint32_t> out) const {
    for (std::size_t f = 0; f < boundaries_.size(); ++f) {
      out[f] = static_cast<std::uint32_t>(interval_index(point[f], boundaries_[f]));
    }
  }

  CellKey cell_key_from_indices(std::span<const std::uint32_t> indices) const {
    CellKey key;
    key.nodes.resize(partition_.node_count());
    for (std::size_t k = 0; k < partition_.node_count(); ++k) {
      for (std::size_t f : partition_.group(k)) key.nodes[k].push_back(indices[f]);
    }
    return key;
  }

  friend bool operator==(const GridQuantizer&, const GridQuantizer&) = default;

 private:
  FeaturePartition partition_;
  std::vector<std::vector<double>> boundaries_;
};

inline CellKey encode(const GridQuantizer& quantizer, std::span<const double> point) {
  if (point.size() != quantizer.n()) {
    throw DimensionError("point has " + std::to_string(point.size()) + " features, quantizer expects " +
                         std::to_string(quantizer.n()));
  }
  std::vector<std::uint32_t> indices(quantizer.n());
  quantizer.interval_indices(point, indices);
  return quantizer.cell_key_from_indices(indices);
}

inline std::uint64_t bin_count(const GridQuantizer& quantizer, std::size_t node) {
  return quantizer.bin_count(node);
}

inline std::uint64_t delta_bins(const GridQuantizer& quantizer, std::size_t feature) {
  return quantizer.delta_bins(feature);
}

// Per-cell class histograms of a dataset under a quantizer. Cells are the
// occupied joint cells, numbered in lexicographic order of their interval
// index vectors.
class CellStatistics {
 public:
  CellStatistics(const GridQuantizer& quantizer, const LabeledDataset& dataset)
      : num_classes_(dataset.num_classes()), cell_of_point_(dataset.size()) {
    if (dataset.n() != quantizer.n()) {
      throw DimensionError("dataset has " + std::to_string(dataset.n()) +
                           " features, quantizer expects " + std::to_string(quantizer.n()));
    }
    std::map<std::vector<std::uint32_t>, std::size_t> index;
    std::vector<std::uint32_t> flat(quantizer.n());
    std::vector<std::vector<std::uint32_t>> point_keys(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      quantizer.interval_indices(dataset[i].features, flat);
      point_keys[i] = flat;
      index.emplace(flat, 0);
    }
    std::size_t next = 0;
    for (auto& [key, id] : index) {
      id = next++;
      keys_.push_back(key);
    }
    counts_.assign(keys_.size() * num_classes_, 0);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const std::size_t cell = index.at(point_keys[i]);
      cell_of_point_[i] = cell;
      ++counts_[cell * num_classes_ + dataset[i].label];
    }
  }

  std::size_t cell_count() const noexcept { return keys_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<std::uint32_t>& indices(std::size_t cell) const { return keys_.at(cell); }
  std::size_t cell_of_point(std::size_t i) const { return cell_of_point_.at(i); }

  std::span<const std::size_t> counts(std::size_t cell) const {
    return std::span<const std::size_t>(counts_).subspan(cell * num_classes_, num_classes_);
  }

  std::size_t size(std::size_t cell) const {
    std::size_t total = 0;
    for (std::size_t c : counts(cell)) total += c;
    return total;
  }

  // Most frequent class; ties go to the smallest class index.
  ClassLabel majority(std::size_t cell) const {
    const auto c = counts(cell);
    return static_cast<ClassLabel>(std::max_element(c.begin(), c.end()) - c.begin());
  }

  std::size_t majority_count(std::size_t cell) const { return counts(cell)[majority(cell)]; }

  std::size_t distinct_classes(std::size_t cell) const {
    return static_cast<std::size_t>(
        std::count_if(counts(cell).begin(), counts(cell).end(), [](std::size_t c) { return c > 0; }));
  }

  // Points not in their cell's majority class.
  std::size_t misclassified() const {
    std::size_t total = 0;
    for (std::size_t cell = 0; cell < cell_count(); ++cell) total += size(cell) - majority_count(cell);
    return total;
  }

 private:
  std::size_t num_classes_;
  std::vector<std::vector<std::uint32_t>> keys_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> cell_of_point_;
};

// Decoder as a cell -> class map; cells absent from the map decode to
// default_class.
struct DecoderTable {
  std::map<CellKey, ClassLabel> classes;
  ClassLabel default_class = 0;

  ClassLabel decode(const CellKey& key) const {
    auto it = classes.find(key);
    return it == classes.end() ? default_class : it->second;
  }

  friend bool operator==(const DecoderTable&, const DecoderTable&) = default;
};

// Majority label per occupied cell (smallest class on ties), default class 0.
inline DecoderTable fit_optimal_decoder(const GridQuantizer& quantizer, const LabeledDataset& dataset) {
  const CellStatistics stats(quantizer, dataset);
  DecoderTable table;
  for (std::size_t cell = 0; cell < stats.cell_count(); ++cell) {
    table.classes.emplace(quantizer.cell_key_from_indices(stats.indices(cell)), stats.majority(cell));
  }
  return table;
}

inline std::size_t misclassified_count(const GridQuantizer& quantizer, const DecoderTable& decoder,
                                       const LabeledDataset& dataset) {
  if (dataset.n() != quantizer.n()) {
    throw DimensionError("dataset has " + std::to_string(dataset.n()) +
                         " features, quantizer expects " + std::to_string(quantizer.n()));
  }
  std::size_t wrong = 0;
  for (const auto& p : dataset) {
    if (decoder.decode(encode(quantizer, p.features)) != p.label) ++wrong;
  }
  return wrong;
}

inline double misclassification_loss(const GridQuantizer& quantizer, const DecoderTable& decoder,
                                     const LabeledDataset& dataset) {
  return static_cast<double>(misclassified_count(quantizer, decoder, dataset)) /
         static_cast<double>(dataset.size());
}

// Misclassified count under the majority decoder, without building it:
// sum over cells of (cell size - majority count).
inline std::size_t optimal_misclassified(const GridQuantizer& quantizer, const LabeledDataset& dataset) {
  return CellStatistics(quantizer, dataset).misclassified();
}

inline double optimal_loss(const GridQuantizer& quantizer, const LabeledDataset& dataset) {
  return static_cast<double>(optimal_misclassified(quantizer, dataset)) /
         static_cast<double>(dataset.size());
}

// First candidate the classifier maps to `target`. The decoder can hand this
// point to the real classifier so that it outputs the cell's majority class.
template <ClassifierLike Oracle>
std::vector<double> find_representative(const Oracle& oracle, std::size_t target,
                                        std::span<const std::vector<double>> candidates) {
  if (candidates.empty()) throw InvalidArgument("no candidates given");
  for (const auto& x : candidates) {
    if (static_cast<std::size_t>(oracle(std::span<const double>(x))) == target) return x;
  }
  throw NoRepresentative("no candidate is classified as class " + std::to_string(target));
}

struct RegularizerOptions {
  // Reject entries outside [-1, 1] (the range of a tanh output layer).
  bool assert_tanh_range = false;
};

// -(1 / (K N)) * sum_i sum_k ||v_k^(i)||^2 over K nodes, each reporting one
// fixed-length vector per data point. Minimized (at -sum_k R_k / K) by
// entries of +-1 when entries are confined to [-1, 1].
inline double quantization_regularizer(
    const std::vector<std::vector<std::vector<double>>>& encoder_outputs,
    RegularizerOptions options = {}) {
  if (encoder_outputs.empty()) throw InvalidArgument("need at least one node");
  const std::size_t points = encoder_outputs.front().size();
  if (points == 0) throw InvalidArgument("need at least one data point");
  double total = 0.0;
  for (std::size_t k = 0; k < encoder_outputs.size(); ++k) {
    const auto& node = encoder_outputs[k];
    if (node.size() != points) {
      throw InvalidArgument("node " + std::to_string(k) + " reports " + std::to_string(node.size()) +
                            " vectors, node 0 reports " + std::to_string(points));
    }
    const std::size_t width = node.front().size();
    for (const auto& v : node) {
      if (v.size() != width) {
        throw InvalidArgument("node " + std::to_string(k) + " has vectors of differing length");
      }
      for (double x : v) {
        if (options.assert_tanh_range && !(x >= -1.0 && x <= 1.0)) {
          throw InvalidArgument("entry " + std::to_string(x) + " outside [-1, 1]");
        }
        total += x * x;
      }
    }
  }
  return -total / static_cast<double>(encoder_outputs.size() * points);
}

}  // namespace dquant
