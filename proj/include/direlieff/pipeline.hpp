#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "direlieff/core.hpp"
#include "direlieff/engine.hpp"
#include "direlieff/neighbors.hpp"
#include "direlieff/stages.hpp"

namespace direlieff::relieff {

/// Where the data-parallel stages run. The driver-side steps (sdif and
/// weights) are the same for every backend.
class ExecutionBackend {
 public:
  virtual ~ExecutionBackend() = default;

  virtual const core::Schema& schema() const = 0;
  virtual std::uint64_t count() = 0;
  /// Global per-feature bounds; throws InvalidArgument on an empty dataset.
  virtual Bounds bounds() = 0;
  virtual std::vector<std::uint64_t> class_counts() = 0;
  virtual std::vector<core::Instance> take_sample(std::size_t m, std::uint64_t seed) = 0;
  virtual NeighborMatrix find_neighbors(const NeighborQuery& query) = 0;
};

/// Runs stages on the in-process worker pool.
class LocalBackend final : public ExecutionBackend {
 public:
  LocalBackend(InstanceDataset dataset, engine::Engine engine);

  const core::Schema& schema() const override { return *dataset_.schema(); }
  std::uint64_t count() override;
  Bounds bounds() override;
  std::vector<std::uint64_t> class_counts() override;
  std::vector<core::Instance> take_sample(std::size_t m, std::uint64_t seed) override;
  NeighborMatrix find_neighbors(const NeighborQuery& query) override;

  const InstanceDataset& dataset() const noexcept { return dataset_; }
  const engine::Engine& engine() const noexcept { return engine_; }

 private:
  InstanceDataset dataset_;
  engine::Engine engine_;
};

/// c x m grid of a-length averaged neighbor differences.
class DiffSumMatrix {
 public:
  DiffSumMatrix(std::size_t classes, std::size_t samples, std::size_t features)
      : classes_(classes),
        samples_(samples),
        features_(features),
        values_(classes * samples * features, 0.0) {}

  std::size_t classes() const noexcept { return classes_; }
  std::size_t samples() const noexcept { return samples_; }
  std::size_t features() const noexcept { return features_; }

  double& at(std::size_t cls, std::size_t sample, std::size_t feature) {
    return values_[(cls * samples_ + sample) * features_ + feature];
  }
  double at(std::size_t cls, std::size_t sample, std::size_t feature) const {
    return values_[(cls * samples_ + sample) * features_ + feature];
  }

 private:
  std::size_t classes_;
  std::size_t samples_;
  std::size_t features_;
  std::vector<double> values_;
};

core::FeatureRange compute_ranges(ExecutionBackend& backend);
core::ClassPriors compute_priors(ExecutionBackend& backend);

/// Draws m samples without replacement; m > n is clamped to n with a
/// warning on `warnings` (if given).
std::vector<core::Instance> select_samples(ExecutionBackend& backend, std::size_t m,
                                           std::uint64_t seed, std::ostream* warnings = nullptr);

NeighborMatrix find_neighbors(ExecutionBackend& backend, const std::vector<core::Instance>& samples,
                              const core::FeatureRange& ranges, std::size_t k,
                              const core::DiffConfig& cfg);

/// SDIF(C, i, A) = sum over NN(C, i) of diff(A, R_i, N) / k. With
/// SdifDivisor::neighbor_count the divisor is the heap's actual size.
DiffSumMatrix compute_sdif(const NeighborMatrix& neighbors,
                           const std::vector<core::Instance>& samples,
                           const core::FeatureRange& ranges, std::size_t k,
                           const core::DiffConfig& cfg,
                           core::SdifDivisor divisor = core::SdifDivisor::k);

/// W[A] = 1/m * sum_i [ -SDIF(cl(R_i), i, A)
///                      + sum_{C != cl(R_i)} P(C) / (1 - P(cl(R_i))) * SDIF(C, i, A) ]
///
/// Absent classes contribute nothing. A sample whose class has prior 1 only
/// contributes its hit term.
core::WeightVector compute_weights(const DiffSumMatrix& sdif,
                                   const std::vector<core::Instance>& samples,
                                   const core::ClassPriors& priors);

struct RankResult {
  core::WeightVector weights;
  std::vector<std::size_t> ranking;
  std::vector<core::Instance> samples;
  core::FeatureRange ranges;
  core::ClassPriors priors;
};

/// ranges -> priors -> samples -> neighbors -> sdif -> weights.
RankResult rank(ExecutionBackend& backend, const core::RankConfig& cfg,
                std::ostream* warnings = nullptr);

/// Weights table: feature_index,feature_name,weight,rank; rows by rank.
void write_weights_csv(std::ostream& out, const core::Schema& schema,
                       const core::WeightVector& weights,
                       const std::vector<std::size_t>& ranking);

}  // namespace direlieff::relieff
