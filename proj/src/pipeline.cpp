#include "direlieff/pipeline.hpp"

#include <ostream>

#include "direlieff/diff.hpp"
#include "direlieff/ingestion.hpp"

namespace direlieff::relieff {

LocalBackend::LocalBackend(InstanceDataset dataset, engine::Engine engine)
    : dataset_(std::move(dataset)), engine_(std::move(engine)) {
  if (!dataset_.schema()) throw InvalidArgument("local backend needs a dataset with a schema");
}

std::uint64_t LocalBackend::count() { return engine_.count(dataset_); }

Bounds LocalBackend::bounds() {
  auto bounds = bounds_stage(engine_, dataset_);
  if (!bounds) throw InvalidArgument("cannot compute feature ranges of an empty dataset");
  return std::move(*bounds);
}

std::vector<std::uint64_t> LocalBackend::class_counts() {
  return class_count_stage(engine_, dataset_, schema().class_count());
}

std::vector<core::Instance> LocalBackend::take_sample(std::size_t m, std::uint64_t seed) {
  return engine_.take_sample(dataset_, m, seed);
}

NeighborMatrix LocalBackend::find_neighbors(const NeighborQuery& query) {
  return neighbor_stage(engine_, dataset_, query);
}

core::FeatureRange compute_ranges(ExecutionBackend& backend) {
  auto bounds = backend.bounds();
  return core::FeatureRange::for_schema(backend.schema(), std::move(bounds.min),
                                        std::move(bounds.max));
}

core::ClassPriors compute_priors(ExecutionBackend& backend) {
  return core::ClassPriors(backend.class_counts());
}

std::vector<core::Instance> select_samples(ExecutionBackend& backend, std::size_t m,
                                           std::uint64_t seed, std::ostream* warnings) {
  if (m < 1) throw InvalidArgument("sample count m must be >= 1");
  const auto n = backend.count();
  if (n == 0) throw InvalidArgument("cannot sample an empty dataset");
  if (m > n) {
    if (warnings) {
      *warnings << "warning: m=" << m << " exceeds n=" << n << "; using m=" << n << '\n';
    }
    m = static_cast<std::size_t>(n);
  }
  return backend.take_sample(m, seed);
}

NeighborMatrix find_neighbors(ExecutionBackend& backend, const std::vector<core::Instance>& samples,
                              const core::FeatureRange& ranges, std::size_t k,
                              const core::DiffConfig& cfg) {
  if (k < 1) throw InvalidArgument("neighbor count k must be >= 1");
  NeighborQuery query;
  query.samples = samples;
  query.ranges = ranges;
  query.classes = backend.schema().class_count();
  query.k = k;
  query.diff = cfg;
  return backend.find_neighbors(query);
}

DiffSumMatrix compute_sdif(const NeighborMatrix& neighbors,
                           const std::vector<core::Instance>& samples,
                           const core::FeatureRange& ranges, std::size_t k,
                           const core::DiffConfig& cfg, core::SdifDivisor divisor) {
  const std::size_t features = ranges.size();
  DiffSumMatrix sdif(neighbors.classes(), samples.size(), features);
  for (std::size_t c = 0; c < neighbors.classes(); ++c) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& heap = neighbors.at(c, i);
      if (heap.empty()) continue;
      const double denom = divisor == core::SdifDivisor::k ? static_cast<double>(k)
                                                           : static_cast<double>(heap.size());
      // nearest first, so the summation order never depends on heap layout
      for (const auto& n : heap.sorted()) {
        for (std::size_t a = 0; a < features; ++a) {
          sdif.at(c, i, a) += core::diff_values(a, n.values[a], samples[i].values[a], ranges, cfg);
        }
      }
      for (std::size_t a = 0; a < features; ++a) sdif.at(c, i, a) /= denom;
    }
  }
  return sdif;
}

core::WeightVector compute_weights(const DiffSumMatrix& sdif,
                                   const std::vector<core::Instance>& samples,
                                   const core::ClassPriors& priors) {
  const std::size_t features = sdif.features();
  const std::size_t m = samples.size();
  core::WeightVector weights(features, 0.0);
  if (m == 0) return weights;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t own = samples[i].label;
    const double own_prior = priors.prior(own);
    for (std::size_t a = 0; a < features; ++a) {
      double term = -sdif.at(own, i, a);
      if (own_prior < 1.0) {
        for (std::size_t c = 0; c < sdif.classes(); ++c) {
          if (c == own || priors.count(c) == 0) continue;
          term += priors.prior(c) / (1.0 - own_prior) * sdif.at(c, i, a);
        }
      }
      weights[a] += term;
    }
  }
  for (auto& w : weights) w /= static_cast<double>(m);
  return weights;
}

RankResult rank(ExecutionBackend& backend, const core::RankConfig& cfg, std::ostream* warnings) {
  cfg.validate();
  RankResult result;
  result.ranges = compute_ranges(backend);
  result.priors = compute_priors(backend);
  result.samples = select_samples(backend, cfg.m, cfg.seed, warnings);
  const auto neighbors = find_neighbors(backend, result.samples, result.ranges, cfg.k, cfg.diff);
  const auto sdif =
      compute_sdif(neighbors, result.samples, result.ranges, cfg.k, cfg.diff, cfg.divisor);
  result.weights = compute_weights(sdif, result.samples, result.priors);
  result.ranking = core::rank_features(result.weights);
  return result;
}

void write_weights_csv(std::ostream& out, const core::Schema& schema,
                       const core::WeightVector& weights,
                       const std::vector<std::size_t>& ranking) {
  out << "feature_index,feature_name,weight,rank\n";
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    const std::size_t a = ranking[r];
    out << a << ',' << schema.feature(a).name << ',' << io::format_double(weights[a]) << ','
        << (r + 1) << '\n';
  }
}

}  // namespace direlieff::relieff
