#include "direlieff/core.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace direlieff::core {

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::nominal ? "nominal" : "numeric";
}

FeatureKind parse_feature_kind(const std::string& text) {
  if (text == "nominal") return FeatureKind::nominal;
  if (text == "numeric") return FeatureKind::numeric;
  throw InvalidArgument("unknown feature kind '" + text + "' (expected nominal|numeric)");
}

std::uint32_t FeatureMeta::intern(const std::string& text) {
  // Category dictionaries are small; a linear scan beats hashing here.
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == text) return static_cast<std::uint32_t>(i);
  }
  categories.push_back(text);
  return static_cast<std::uint32_t>(categories.size() - 1);
}

Schema::Schema(std::vector<FeatureMeta> features, std::vector<std::string> class_labels)
    : features_(std::move(features)), class_labels_(std::move(class_labels)) {}

std::ptrdiff_t Schema::find_class(const std::string& label) const {
  auto it = std::find(class_labels_.begin(), class_labels_.end(), label);
  return it == class_labels_.end() ? -1 : std::distance(class_labels_.begin(), it);
}

void Schema::validate() const {
  if (features_.empty()) {
    throw InvalidArgument("schema needs at least one feature");
  }
  if (class_labels_.size() < 2) {
    throw InvalidArgument("schema needs at least two class labels, got " +
                          std::to_string(class_labels_.size()));
  }
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].index != i) {
      throw InvalidArgument("feature '" + features_[i].name + "' has index " +
                            std::to_string(features_[i].index) + ", expected " +
                            std::to_string(i));
    }
    if (!names.insert(features_[i].name).second) {
      throw InvalidArgument("duplicate feature name '" + features_[i].name + "'");
    }
  }
  std::unordered_set<std::string> labels(class_labels_.begin(), class_labels_.end());
  if (labels.size() != class_labels_.size()) {
    throw InvalidArgument("class labels are not distinct");
  }
}

FeatureRange::FeatureRange(std::vector<FeatureKind> kinds, std::vector<double> min,
                           std::vector<double> max)
    : kinds_(std::move(kinds)), min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != kinds_.size() || max_.size() != kinds_.size()) {
    throw InvalidArgument("feature range vectors differ in length");
  }
  for (std::size_t a = 0; a < kinds_.size(); ++a) {
    if (kinds_[a] == FeatureKind::numeric && !(min_[a] <= max_[a])) {
      throw InvalidArgument("feature " + std::to_string(a) + " has min > max");
    }
  }
}

FeatureRange FeatureRange::for_schema(const Schema& schema, std::vector<double> min,
                                      std::vector<double> max) {
  std::vector<FeatureKind> kinds;
  kinds.reserve(schema.feature_count());
  for (const auto& f : schema.features()) kinds.push_back(f.kind);
  return FeatureRange(std::move(kinds), std::move(min), std::move(max));
}

ClassPriors::ClassPriors(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  if (total_ == 0) {
    throw InvalidArgument("class priors of an empty dataset");
  }
  priors_.reserve(counts_.size());
  for (auto c : counts_) {
    priors_.push_back(static_cast<double>(c) / static_cast<double>(total_));
  }
}

void DiffConfig::validate() const {
  if (!(t_eq >= 0.0 && t_eq < t_diff && t_diff <= 1.0)) {
    throw InvalidArgument("ramp thresholds must satisfy 0 <= t_eq < t_diff <= 1");
  }
}

void RankConfig::validate() const {
  if (m < 1) throw InvalidArgument("sample count m must be >= 1");
  if (k < 1) throw InvalidArgument("neighbor count k must be >= 1");
  diff.validate();
}

std::vector<std::size_t> rank_features(std::span<const double> weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return weights[a] > weights[b];
  });
  return order;
}

}  // namespace direlieff::core
