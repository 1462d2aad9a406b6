#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "direlieff/error.hpp"

namespace direlieff::core {

enum class FeatureKind : std::uint8_t { nominal = 0, numeric = 1 };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& text);

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::size_t index = 0;
  /// Interned category texts of a nominal feature; position == category id.
  std::vector<std::string> categories;

  /// Returns the id of `text`, adding it when unseen.
  std::uint32_t intern(const std::string& text);
};

/// Feature metadata plus the class label dictionary.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<FeatureMeta> features, std::vector<std::string> class_labels);

  std::size_t feature_count() const noexcept { return features_.size(); }
  std::size_t class_count() const noexcept { return class_labels_.size(); }

  const std::vector<FeatureMeta>& features() const noexcept { return features_; }
  std::vector<FeatureMeta>& mutable_features() noexcept { return features_; }
  const FeatureMeta& feature(std::size_t index) const { return features_.at(index); }

  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
  /// Index of `label`, or -1 when absent.
  std::ptrdiff_t find_class(const std::string& label) const;

  /// Throws InvalidArgument unless indices are dense, names unique, a >= 1
  /// and c >= 2.
  void validate() const;

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<FeatureMeta> features_;
  std::vector<std::string> class_labels_;
};

inline bool operator==(const FeatureMeta& lhs, const FeatureMeta& rhs) {
  return lhs.name == rhs.name && lhs.kind == rhs.kind && lhs.index == rhs.index &&
         lhs.categories == rhs.categories;
}

/// One row: feature values (nominal slots hold category ids) and class id.
struct Instance {
  std::uint64_t id = 0;
  std::uint32_t label = 0;
  std::vector<double> values;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Per-feature value interval. Nominal features carry no meaningful bounds.
class FeatureRange {
 public:
  FeatureRange() = default;
  FeatureRange(std::vector<FeatureKind> kinds, std::vector<double> min,
               std::vector<double> max);

  static FeatureRange for_schema(const Schema& schema, std::vector<double> min,
                                 std::vector<double> max);

  std::size_t size() const noexcept { return kinds_.size(); }
  bool is_numeric(std::size_t feature) const { return kinds_[feature] == FeatureKind::numeric; }
  FeatureKind kind(std::size_t feature) const { return kinds_[feature]; }
  double min(std::size_t feature) const { return min_[feature]; }
  double max(std::size_t feature) const { return max_[feature]; }

  const std::vector<FeatureKind>& kinds() const noexcept { return kinds_; }
  const std::vector<double>& mins() const noexcept { return min_; }
  const std::vector<double>& maxs() const noexcept { return max_; }

  friend bool operator==(const FeatureRange&, const FeatureRange&) = default;

 private:
  std::vector<FeatureKind> kinds_;
  std::vector<double> min_;
  std::vector<double> max_;
};

/// Empirical class frequencies; prior(C) = count(C) / n.
class ClassPriors {
 public:
  ClassPriors() = default;
  explicit ClassPriors(std::vector<std::uint64_t> counts);

  std::size_t class_count() const noexcept { return counts_.size(); }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t count(std::size_t cls) const { return counts_.at(cls); }
  double prior(std::size_t cls) const { return priors_.at(cls); }
  const std::vector<double>& priors() const noexcept { return priors_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

 private:
  std::vector<std::uint64_t> counts_;
  std::vector<double> priors_;
  std::uint64_t total_ = 0;
};

enum class NumericDiff : std::uint8_t { linear = 0, ramp = 1 };

struct DiffConfig {
  NumericDiff numeric_mode = NumericDiff::linear;
  double t_eq = 0.05;
  double t_diff = 0.10;

  /// Requires 0 <= t_eq < t_diff <= 1.
  void validate() const;
};

/// Denominator of the averaged neighbor difference sums.
enum class SdifDivisor : std::uint8_t {
  k = 0,               ///< always divide by k, even for under-populated classes
  neighbor_count = 1,  ///< divide by the number of neighbors actually found
};

struct RankConfig {
  std::size_t m = 10;
  std::size_t k = 10;
  std::uint64_t seed = 1;
  DiffConfig diff;
  SdifDivisor divisor = SdifDivisor::k;

  void validate() const;
};

using WeightVector = std::vector<double>;

/// Feature indices sorted by weight descending, ties by ascending index.
std::vector<std::size_t> rank_features(std::span<const double> weights);

}  // namespace direlieff::core
