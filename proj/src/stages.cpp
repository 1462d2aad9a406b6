#include "direlieff/stages.hpp"

#include <algorithm>

#include "direlieff/diff.hpp"

namespace direlieff::relieff {

Bounds merge_bounds(Bounds lhs, const Bounds& rhs) {
  for (std::size_t a = 0; a < lhs.min.size(); ++a) {
    lhs.min[a] = std::min(lhs.min[a], rhs.min[a]);
    lhs.max[a] = std::max(lhs.max[a], rhs.max[a]);
  }
  return lhs;
}

std::optional<Bounds> bounds_stage(const engine::Engine& engine, const InstanceDataset& ds) {
  if (engine.count(ds) == 0) return std::nullopt;
  const auto bounds = engine.map(ds.cached(false), &Bounds::of);
  return engine.reduce(bounds, [](Bounds lhs, const Bounds& rhs) {
    return merge_bounds(std::move(lhs), rhs);
  });
}

std::vector<std::uint64_t> class_count_stage(const engine::Engine& engine,
                                             const InstanceDataset& ds, std::size_t classes) {
  return engine.aggregate(
      ds, std::vector<std::uint64_t>(classes, 0),
      [classes](std::vector<std::uint64_t>& counts, const core::Instance& instance) {
        if (instance.label >= classes) {
          throw InvalidArgument("instance " + std::to_string(instance.id) + " has class id " +
                                std::to_string(instance.label) + " outside the schema");
        }
        ++counts[instance.label];
      },
      [](std::vector<std::uint64_t>& into, const std::vector<std::uint64_t>& from) {
        for (std::size_t c = 0; c < into.size(); ++c) into[c] += from[c];
      });
}

void offer_instance(NeighborMatrix& local, const core::Instance& instance,
                    const NeighborQuery& query) {
  const auto& samples = query.samples;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].id == instance.id) continue;
    const double d = core::distance(instance, samples[i], query.ranges, query.diff);
    local.at(instance.label, i).offer(d, instance);
  }
}

NeighborMatrix neighbor_stage(const engine::Engine& engine, const InstanceDataset& ds,
                              const NeighborQuery& query) {
  const NeighborMatrix empty(query.classes, query.samples.size(), query.k);
  return engine.aggregate(
      ds, empty,
      [&query](NeighborMatrix& local, const core::Instance& instance) {
        if (instance.label >= query.classes) {
          throw InvalidArgument("instance " + std::to_string(instance.id) +
                                " has a class id outside the schema");
        }
        offer_instance(local, instance, query);
      },
      [](NeighborMatrix& into, const NeighborMatrix& from) { into.merge(from); },
      [](const NeighborMatrix& m) { return m.serialized_size(); });
}

}  // namespace direlieff::relieff
