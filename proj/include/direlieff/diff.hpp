#pragma once

#include <cmath>
#include <cstddef>

#include "direlieff/core.hpp"

namespace direlieff::core {

/// Normalized difference of feature `feature` between two instances, in [0, 1].
///
/// Nominal features compare category ids for equality. Numeric features use
/// |v1 - v2| / (max - min); in ramp mode that relative distance d is mapped
/// to 0 below t_eq, 1 above t_diff and linearly in between. A constant
/// numeric feature (max == min) always yields 0.
inline double diff_values(std::size_t feature, double x, double y, const FeatureRange& ranges,
                          const DiffConfig& cfg) {
  if (!ranges.is_numeric(feature)) {
    return x == y ? 0.0 : 1.0;
  }
  const double span = ranges.max(feature) - ranges.min(feature);
  if (!(span > 0.0)) {
    return 0.0;
  }
  double d = std::abs(x - y) / span;
  // values from outside the dataset the ranges came from
  if (d > 1.0) {
    d = 1.0;
  }
  if (cfg.numeric_mode == NumericDiff::linear) {
    return d;
  }
  if (d <= cfg.t_eq) {
    return 0.0;
  }
  if (d > cfg.t_diff) {
    return 1.0;
  }
  return (d - cfg.t_eq) / (cfg.t_diff - cfg.t_eq);
}

inline double diff(std::size_t feature, const Instance& lhs, const Instance& rhs,
                   const FeatureRange& ranges, const DiffConfig& cfg) {
  return diff_values(feature, lhs.values[feature], rhs.values[feature], ranges, cfg);
}

/// Manhattan distance: sum of per-feature diffs, in [0, a].
inline double distance(const Instance& lhs, const Instance& rhs, const FeatureRange& ranges,
                       const DiffConfig& cfg) {
  double total = 0.0;
  const std::size_t features = ranges.size();
  for (std::size_t a = 0; a < features; ++a) {
    total += diff(a, lhs, rhs, ranges, cfg);
  }
  return total;
}

}  // namespace direlieff::core
