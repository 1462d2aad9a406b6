#pragma once

// The distributed stages of the ranking pipeline expressed as engine actions
// over a partitioned dataset. Both the local backend and cluster workers run
// exactly these functions, so their results agree bit for bit.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "direlieff/core.hpp"
#include "direlieff/engine.hpp"
#include "direlieff/neighbors.hpp"

namespace direlieff::relieff {

using InstanceDataset = engine::PartitionedDataset<core::Instance>;

/// Element-wise bounds of a set of instances.
struct Bounds {
  std::vector<double> min;
  std::vector<double> max;

  static Bounds of(const core::Instance& instance) { return {instance.values, instance.values}; }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// fmin/fmax combined into one commutative, associative step.
Bounds merge_bounds(Bounds lhs, const Bounds& rhs);

/// Global bounds via reduce; std::nullopt when the dataset is empty.
std::optional<Bounds> bounds_stage(const engine::Engine& engine, const InstanceDataset& ds);

/// Per-class instance counts via aggregate with a dense counter.
std::vector<std::uint64_t> class_count_stage(const engine::Engine& engine,
                                             const InstanceDataset& ds, std::size_t classes);

/// Inputs of the neighbor search shared by every partition.
struct NeighborQuery {
  std::vector<core::Instance> samples;
  core::FeatureRange ranges;
  std::size_t classes = 0;
  std::size_t k = 0;
  core::DiffConfig diff;
};

/// localNN: offers `instance` to heap (class, i) for every sample i other
/// than itself.
void offer_instance(NeighborMatrix& local, const core::Instance& instance,
                    const NeighborQuery& query);

/// Single aggregate pass building the c x m neighbor matrix. Throws
/// CapacityError when the partition results exceed max_result_bytes.
NeighborMatrix neighbor_stage(const engine::Engine& engine, const InstanceDataset& ds,
                              const NeighborQuery& query);

}  // namespace direlieff::relieff
