#pragma once

#include <dquant/error.hpp>
#include <dquant/rng.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dquant {

using ClassLabel = std::uint32_t;

struct LabeledPoint {
  std::vector<double> features;
  ClassLabel label = 0;

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

// Training set T: N points in R^n, each with a class in [0, num_classes).
class LabeledDataset {
 public:
  LabeledDataset(std::size_t n, std::size_t num_classes,
                 std::vector<LabeledPoint> points)
      : n_(n), num_classes_(num_classes), points_(std::move(points)) {
    if (points_.empty()) throw InvalidArgument("dataset must hold at least one point");
    if (num_classes_ == 0) throw InvalidArgument("dataset must have at least one class");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].features.size() != n_) {
        throw DimensionError("point " + std::to_string(i) + " has " +
                             std::to_string(points_[i].features.size()) +
                             " features, expected " + std::to_string(n_));
      }
      for (double v : points_[i].features) {
        if (!std::isfinite(v)) {
          throw InvalidArgument("point " + std::to_string(i) + " has a non-finite feature");
        }
      }
      if (points_[i].label >= num_classes_) {
        throw InvalidArgument("point " + std::to_string(i) + " has label " +
                              std::to_string(points_[i].label) + " >= num_classes " +
                              std::to_string(num_classes_));
      }
    }
  }

  // num_classes inferred as 1 + max label.
  static LabeledDataset from_points(std::size_t n, std::vector<LabeledPoint> points) {
    ClassLabel max_label = 0;
    for (const auto& p : points) max_label = std::max(max_label, p.label);
    return LabeledDataset(n, static_cast<std::size_t>(max_label) + 1, std::move(points));
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<LabeledPoint>& points() const noexcept { return points_; }
  const LabeledPoint& operator[](std::size_t i) const { return points_[i]; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  // Per-class point counts.
  std::vector<std::size_t> class_histogram() const {
    std::vector<std::size_t> hist(num_classes_, 0);
    for (const auto& p : points_) ++hist[p.label];
    return hist;
  }

  LabeledDataset subset(std::span<const std::size_t> indices) const {
    std::vector<LabeledPoint> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) picked.push_back(points_.at(i));
    return LabeledDataset(n_, num_classes_, std::move(picked));
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  std::size_t n_;
  std::size_t num_classes_;
  std::vector<LabeledPoint> points_;
};

// Per-node bit budget R_k, or Unbounded (R_k -> infinity).
class Rate {
 public:
  constexpr Rate() = default;
  static constexpr Rate bits(std::uint32_t r) { return Rate(r); }
  static constexpr Rate unbounded() { return Rate(); }

  constexpr bool is_unbounded() const noexcept { return !bits_.has_value(); }
  constexpr std::uint32_t value() const { return bits_.value(); }

  // 2^R, saturating at UINT64_MAX; UINT64_MAX for Unbounded.
  constexpr std::uint64_t bin_capacity() const noexcept {
    if (!bits_ || *bits_ >= 64) return UINT64_MAX;
    return std::uint64_t{1} << *bits_;
  }

  constexpr bool admits(std::uint64_t bins) const noexcept {
    return is_unbounded() || bins <= bin_capacity();
  }

  friend constexpr bool operator==(const Rate&, const Rate&) = default;

 private:
  constexpr explicit Rate(std::uint32_t r) : bits_(r) {}
  std::optional<std::uint32_t> bits_;
};

// K disjoint feature groups covering [0, n), one rate per group.
class FeaturePartition {
 public:
  FeaturePartition(std::size_t n, std::vector<std::vector<std::size_t>> groups,
                   std::vector<Rate> rates)
      : n_(n), groups_(std::move(groups)), rates_(std::move(rates)), node_of_(n, kNoNode) {
    if (groups_.empty()) throw InvalidArgument("partition needs at least one group");
    if (groups_.size() != rates_.size()) {
      throw InvalidArgument("partition has " + std::to_string(groups_.size()) +
                            " groups but " + std::to_string(rates_.size()) + " rates");
    }
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      if (groups_[k].empty() && rates_[k] != Rate::bits(0)) {
        throw InvalidArgument("group " + std::to_string(k) + " is empty but has nonzero rate");
      }
      for (std::size_t f : groups_[k]) {
        if (f >= n_) {
          throw InvalidArgument("feature index " + std::to_string(f) + " out of range for n=" +
                                std::to_string(n_));
        }
        if (node_of_[f] != kNoNode) {
          throw InvalidArgument("feature " + std::to_string(f) + " appears in two groups");
        }
        node_of_[f] = k;
      }
    }
    for (std::size_t f = 0; f < n_; ++f) {
      if (node_of_[f] == kNoNode) {
        throw InvalidArgument("feature " + std::to_string(f) + " belongs to no group");
      }
    }
  }

  // One node per feature, every node at the same rate.
  static FeaturePartition singletons(std::size_t n, Rate rate) {
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t f = 0; f < n; ++f) groups[f] = {f};
    return FeaturePartition(n, std::move(groups), std::vector<Rate>(n, rate));
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t node_count() const noexcept { return groups_.size(); }
  const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }
  const std::vector<std::size_t>& group(std::size_t k) const { return groups_.at(k); }
  const std::vector<Rate>& rates() const noexcept { return rates_; }
  Rate rate(std::size_t k) const { return rates_.at(k); }
  std::size_t node_of(std::size_t feature) const { return node_of_.at(feature); }

  FeaturePartition with_rates(std::vector<Rate> rates) const {
    return FeaturePartition(n_, groups_, std::move(rates));
  }

  friend bool operator==(const FeaturePartition&, const FeaturePartition&) = default;

 private:
  static constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);
  std::size_t n_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<Rate> rates_;
  std::vector<std::size_t> node_of_;
};

// Opaque label function x -> class. Anything callable with a feature span works;
// this alias is the type-erased form.
using ClassifierOracle = std::function<std::size_t(std::span<const double>)>;

template <class F>
concept ClassifierLike = std::invocable<const F&, std::span<const double>> &&
    std::convertible_to<std::invoke_result_t<const F&, std::span<const double>>, std::size_t>;

// ----------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::optional<double> parse_real(std::string_view cell) {
  double value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

inline std::optional<std::int64_t> parse_integer(std::string_view cell) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return value;
}

inline std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace detail

// Reads `f0,...,f{n-1},label` CSV. n comes from the header, num_classes is
// 1 + max label.
inline LabeledDataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(ParseErrorKind::kEmptyFile, 0, "");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.empty()) throw ParseError(ParseErrorKind::kEmptyFile, 0, "");

  const auto header = detail::split_commas(line);
  const std::size_t n = header.size() - 1;
  if (header.size() < 2 || header.back() != "label") {
    throw ParseError(ParseErrorKind::kMalformedHeader, 0, "last column must be 'label'");
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (header[f] != "f" + std::to_string(f)) {
      throw ParseError(ParseErrorKind::kMalformedHeader, 0,
                       "column " + std::to_string(f) + " must be 'f" + std::to_string(f) + "'");
    }
  }

  std::vector<LabeledPoint> points;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      // Only a trailing newline may leave an empty line.
      if (in.peek() == std::istream::traits_type::eof()) break;
      throw ParseError(ParseErrorKind::kColumnCount, row, "blank line");
    }
    const auto cells = detail::split_commas(line);
    if (cells.size() != n + 1) {
      throw ParseError(ParseErrorKind::kColumnCount, row,
                       std::to_string(cells.size()) + " cells, expected " + std::to_string(n + 1));
    }
    LabeledPoint p;
    p.features.reserve(n);
    for (std::size_t f = 0; f < n; ++f) {
      auto value = detail::parse_real(cells[f]);
      if (!value) throw ParseError(ParseErrorKind::kNonNumeric, row, std::string(cells[f]));
      p.features.push_back(*value);
    }
    auto label = detail::parse_integer(cells[n]);
    if (!label) throw ParseError(ParseErrorKind::kNonNumeric, row, std::string(cells[n]));
    if (*label < 0) throw ParseError(ParseErrorKind::kNegativeLabel, row, std::string(cells[n]));
    if (*label > std::numeric_limits<ClassLabel>::max() - 1) {
      throw ParseError(ParseErrorKind::kNonNumeric, row, "label out of range");
    }
    p.label = static_cast<ClassLabel>(*label);
    points.push_back(std::move(p));
  }
  if (points.empty()) throw ParseError(ParseErrorKind::kNoRows, row, "");
  return LabeledDataset::from_points(n, std::move(points));
}

inline LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_csv(in);
}

// Reals are written in shortest round-trip form, so read_csv(write_csv(d)) == d
// whenever num_classes == 1 + max label.
inline void write_csv(const LabeledDataset& dataset, std::ostream& out) {
  for (std::size_t f = 0; f < dataset.n(); ++f) out << 'f' << f << ',';
  out << "label\n";
  for (const auto& p : dataset) {
    for (double v : p.features) out << detail::format_real(v) << ',';
    out << p.label << '\n';
  }
}

inline void save_csv(const LabeledDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_csv(dataset, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

// ----------------------------------------------------------------------------
// Synthesis

// Two classes separated by the diagonal: class 0 iff x1 > x2 + margin,
// class 1 iff x2 > x1 + margin. Coordinates are uniform in [-1, 1); points
// inside the margin band are rejected and redrawn.
inline LabeledDataset synth_linear2d(std::size_t count, std::uint64_t seed, double margin) {
  if (count == 0) throw InvalidArgument("count must be positive");
  if (!(margin >= 0.0) || margin >= 2.0) throw InvalidArgument("margin must lie in [0, 2)");
  Rng rng(seed);
  std::vector<LabeledPoint> points;
  points.reserve(count);
  while (points.size() < count) {
    const double x1 = rng.uniform(-1.0, 1.0);
    const double x2 = rng.uniform(-1.0, 1.0);
    if (x1 > x2 + margin) {
      points.push_back({{x1, x2}, 0});
    } else if (x2 > x1 + margin) {
      points.push_back({{x1, x2}, 1});
    }
  }
  return LabeledDataset(2, 2, std::move(points));
}

// The four-corner XOR pattern: equal-sign corners are class 0.
inline LabeledDataset synth_xor() {
  return LabeledDataset(2, 2,
                        {{{-1.0, -1.0}, 0}, {{-1.0, 1.0}, 1}, {{1.0, -1.0}, 1}, {{1.0, 1.0}, 0}});
}

// Replaces every label by the oracle's decision on the point's features.
template <ClassifierLike Oracle>
LabeledDataset relabel_with_classifier(const LabeledDataset& dataset, const Oracle& oracle) {
  std::vector<LabeledPoint> points;
  points.reserve(dataset.size());
  for (const auto& p : dataset) {
    const std::size_t c = oracle(std::span<const double>(p.features));
    if (c >= dataset.num_classes()) {
      throw InvalidArgument("oracle returned class " + std::to_string(c) +
                            " outside [0, " + std::to_string(dataset.num_classes()) + ")");
    }
    points.push_back({p.features, static_cast<ClassLabel>(c)});
  }
  return LabeledDataset(dataset.n(), dataset.num_classes(), std::move(points));
}

}  // namespace dquant
