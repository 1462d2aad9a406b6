#include "direlieff/reference.hpp"

#include <algorithm>

#include "direlieff/diff.hpp"
#include "direlieff/neighbors.hpp"

namespace direlieff::reference {

core::WeightVector relieff_sequential(const core::Schema& schema,
                                      std::span<const core::Instance> instances,
                                      std::span<const core::Instance> samples, std::size_t k,
                                      const core::DiffConfig& cfg) {
  const std::size_t a = schema.feature_count();
  const std::size_t c = schema.class_count();
  if (c == 0) throw InvalidArgument("reference ReliefF needs at least one class");
  if (k < 1) throw InvalidArgument("neighbor count k must be >= 1");
  if (instances.empty()) throw InvalidArgument("reference ReliefF on an empty dataset");
  cfg.validate();

  // priors P(C)
  std::vector<double> count(c, 0.0);
  for (const auto& inst : instances) count.at(inst.label) += 1.0;
  std::vector<double> prior(c);
  for (std::size_t cls = 0; cls < c; ++cls) {
    prior[cls] = count[cls] / static_cast<double>(instances.size());
  }

  // value intervals
  std::vector<double> lo = instances.front().values;
  std::vector<double> hi = instances.front().values;
  for (const auto& inst : instances) {
    for (std::size_t f = 0; f < a; ++f) {
      if (inst.values[f] < lo[f]) lo[f] = inst.values[f];
      if (inst.values[f] > hi[f]) hi[f] = inst.values[f];
    }
  }
  const auto ranges = core::FeatureRange::for_schema(schema, lo, hi);

  const double m = static_cast<double>(samples.size());
  const double mk = m * static_cast<double>(k);
  core::WeightVector weights(a, 0.0);

  for (const auto& sample : samples) {
    std::vector<relieff::NeighborHeap> nearest(c, relieff::NeighborHeap(k));
    for (const auto& inst : instances) {
      if (inst.id == sample.id) continue;
      nearest[inst.label].offer(core::distance(inst, sample, ranges, cfg), inst);
    }
    const std::size_t own = sample.label;
    std::vector<std::vector<relieff::Neighbor>> found(c);
    for (std::size_t cls = 0; cls < c; ++cls) found[cls] = nearest[cls].sorted();

    for (std::size_t f = 0; f < a; ++f) {
      double hits = 0.0;
      for (const auto& h : found[own]) {
        hits += core::diff_values(f, sample.values[f], h.values[f], ranges, cfg);
      }
      const double ah = -hits / mk;

      double am = 0.0;
      if (prior[own] < 1.0) {
        for (std::size_t cls = 0; cls < c; ++cls) {
          if (cls == own || count[cls] == 0.0) continue;
          double misses = 0.0;
          for (const auto& miss : found[cls]) {
            misses += core::diff_values(f, sample.values[f], miss.values[f], ranges, cfg);
          }
          am += prior[cls] / (1.0 - prior[own]) * misses;
        }
        am /= mk;
      }
      weights[f] += ah + am;
    }
  }
  return weights;
}

}  // namespace direlieff::reference
