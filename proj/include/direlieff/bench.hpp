#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "direlieff/core.hpp"
#include "direlieff/engine.hpp"
#include "direlieff/ingestion.hpp"
#include "direlieff/pipeline.hpp"

namespace direlieff::bench {

/// Version string recorded in every report.
std::string version();

/// Mean absolute per-feature difference of two weight vectors.
double avg_diff(std::span<const double> lhs, std::span<const double> rhs);

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t informative = 5;
  std::size_t noise = 15;
  std::size_t classes = 2;
  std::uint64_t seed = 1;
  double flip_prob = 0.0;
};

/// Class-balanced synthetic data. Informative features are Gaussian with
/// unit variance and mean equal to the true class index (unit separation);
/// noise features are uniform on [0, 1). Each recorded label is replaced by
/// a different class with probability flip_prob. Informative features come
/// first. Deterministic per seed on every platform.
io::Dataset gen_synthetic(const SyntheticSpec& spec);

/// Writes `<prefix>.csv` and `<prefix>.schema.json`; returns both paths.
std::pair<std::filesystem::path, std::filesystem::path> write_synthetic(
    const SyntheticSpec& spec, const std::filesystem::path& prefix);

struct StabilityPoint {
  std::size_t m = 0;
  double mean_avg_diff = 0.0;
};

/// For each m, ranks once per seed of every pair and averages avg_diff
/// over the pairs. m beyond n is clamped.
std::vector<StabilityPoint> stability_curve(
    const relieff::InstanceDataset& dataset, const engine::Engine& engine,
    std::span<const std::size_t> m_values, std::size_t k,
    std::span<const std::pair<std::uint64_t, std::uint64_t>> seed_pairs,
    const core::DiffConfig& diff = {});

enum class Axis { n, a, m };
Axis parse_axis(const std::string& text);
std::string to_string(Axis axis);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys);

struct TimingRow {
  double point = 0.0;
  double median_seconds = 0.0;
  std::vector<double> samples;
};

struct ScalingSpec {
  SyntheticSpec data;
  Axis axis = Axis::n;
  /// For Axis::a each point is the total feature count; informative
  /// features stay at data.informative (capped at the point).
  std::vector<std::size_t> points;
  core::RankConfig rank;
  std::size_t workers = 1;
  std::size_t partitions = 1;
  std::size_t repetitions = 3;
};

struct ScalingReport {
  std::vector<TimingRow> rows;
  LinearFit fit;
};

/// Times rank() at each point (median of `repetitions`). Needs >= 3 points.
ScalingReport scaling_sweep(const ScalingSpec& spec);

struct SpeedupReport {
  std::vector<TimingRow> rows;  ///< point = worker count
  bool weights_identical = true;
  core::WeightVector weights;
};

/// Times rank() on `dataset` for each worker count with a fixed seed.
SpeedupReport speedup_sweep(const relieff::InstanceDataset& dataset,
                            std::span<const std::size_t> worker_counts,
                            const core::RankConfig& cfg, std::size_t repetitions = 3);

/// Header comment recording version, seed and configuration.
std::string report_preamble(std::uint64_t seed, const std::string& config);

/// "point,median_seconds" table preceded by the preamble.
void write_timing_csv(const std::filesystem::path& path, const std::string& preamble,
                      const std::string& point_name, const std::vector<TimingRow>& rows);

/// Whitespace-separated "x y" columns for plotting tools.
void write_plot_data(const std::filesystem::path& path, const std::string& preamble,
                     const std::vector<std::pair<double, double>>& points);

double median(std::vector<double> values);

}  // namespace direlieff::bench
