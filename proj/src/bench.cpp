#include "direlieff/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#ifndef DIRELIEFF_VERSION
#define DIRELIEFF_VERSION "unknown"
#endif

namespace direlieff::bench {

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box-Muller; one fresh pair per call keeps the stream position simple.
double standard_normal(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  while (u1 <= 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double time_rank(relieff::ExecutionBackend& backend, const core::RankConfig& cfg,
                 core::WeightVector* weights = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  auto result = relieff::rank(backend, cfg);
  const double elapsed = seconds_since(start);
  if (weights) *weights = std::move(result.weights);
  return elapsed;
}

}  // namespace

std::string version() { return DIRELIEFF_VERSION; }

double avg_diff(std::span<const double> lhs, std::span<const double> rhs) {
  if (lhs.size() != rhs.size()) {
    throw InvalidArgument("weight vectors differ in length (" + std::to_string(lhs.size()) +
                          " vs " + std::to_string(rhs.size()) + ")");
  }
  if (lhs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t a = 0; a < lhs.size(); ++a) total += std::abs(lhs[a] - rhs[a]);
  return total / static_cast<double>(lhs.size());
}

io::Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw InvalidArgument("synthetic data needs at least two classes");
  if (spec.informative + spec.noise == 0) throw InvalidArgument("synthetic data needs features");
  if (!(spec.flip_prob >= 0.0 && spec.flip_prob < 0.5)) {
    throw InvalidArgument("flip probability must lie in [0, 0.5)");
  }
  std::vector<core::FeatureMeta> features;
  for (std::size_t j = 0; j < spec.informative; ++j) {
    features.push_back({"informative_" + std::to_string(j), core::FeatureKind::numeric,
                        features.size(), {}});
  }
  for (std::size_t j = 0; j < spec.noise; ++j) {
    features.push_back(
        {"noise_" + std::to_string(j), core::FeatureKind::numeric, features.size(), {}});
  }
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < spec.classes; ++c) labels.push_back("c" + std::to_string(c));

  io::Dataset out;
  out.schema = core::Schema(std::move(features), std::move(labels));
  out.instances.reserve(spec.n);
  std::mt19937_64 rng(spec.seed);
  const std::size_t a = spec.informative + spec.noise;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto truth = engine::uniform_below(rng, spec.classes);
    core::Instance inst;
    inst.id = i;
    inst.values.resize(a);
    for (std::size_t j = 0; j < spec.informative; ++j) {
      inst.values[j] = static_cast<double>(truth) + standard_normal(rng);
    }
    for (std::size_t j = spec.informative; j < a; ++j) inst.values[j] = unit_uniform(rng);
    auto label = truth;
    if (spec.flip_prob > 0.0 && unit_uniform(rng) < spec.flip_prob) {
      label = (truth + 1 + engine::uniform_below(rng, spec.classes - 1)) % spec.classes;
    }
    inst.label = static_cast<std::uint32_t>(label);
    out.instances.push_back(std::move(inst));
  }
  return out;
}

std::pair<std::filesystem::path, std::filesystem::path> write_synthetic(
    const SyntheticSpec& spec, const std::filesystem::path& prefix) {
  std::filesystem::path csv = prefix;
  csv += ".csv";
  std::filesystem::path sidecar = prefix;
  sidecar += ".schema.json";
  io::write_csv(csv, sidecar, gen_synthetic(spec));
  return {csv, sidecar};
}

std::vector<StabilityPoint> stability_curve(
    const relieff::InstanceDataset& dataset, const engine::Engine& engine,
    std::span<const std::size_t> m_values, std::size_t k,
    std::span<const std::pair<std::uint64_t, std::uint64_t>> seed_pairs,
    const core::DiffConfig& diff) {
  if (seed_pairs.empty()) throw InvalidArgument("stability curve needs at least one seed pair");
  relieff::LocalBackend backend(dataset, engine);
  const auto n = backend.count();
  std::vector<StabilityPoint> out;
  for (auto m : m_values) {
    core::RankConfig cfg;
    cfg.m = std::min<std::size_t>(m, n);
    cfg.k = k;
    cfg.diff = diff;
    double total = 0.0;
    for (const auto& [first, second] : seed_pairs) {
      cfg.seed = first;
      const auto w1 = relieff::rank(backend, cfg).weights;
      cfg.seed = second;
      const auto w2 = relieff::rank(backend, cfg).weights;
      total += avg_diff(w1, w2);
    }
    out.push_back({m, total / static_cast<double>(seed_pairs.size())});
  }
  return out;
}

Axis parse_axis(const std::string& text) {
  if (text == "n") return Axis::n;
  if (text == "a") return Axis::a;
  if (text == "m") return Axis::m;
  throw InvalidArgument("unknown sweep axis '" + text + "' (expected n|a|m)");
}

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::n: return "n";
    case Axis::a: return "a";
    case Axis::m: return "m";
  }
  return "?";
}

LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InvalidArgument("linear fit needs at least two (x, y) pairs");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

ScalingReport scaling_sweep(const ScalingSpec& spec) {
  if (spec.points.size() < 3) {
    throw InvalidArgument("a scaling sweep needs at least 3 points, got " +
                          std::to_string(spec.points.size()));
  }
  if (spec.repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  ScalingReport report;
  std::vector<relieff::LocalBackend> backends;
  std::vector<core::RankConfig> configs;
  for (auto point : spec.points) {
    SyntheticSpec data = spec.data;
    core::RankConfig cfg = spec.rank;
    switch (spec.axis) {
      case Axis::n:
        data.n = point;
        break;
      case Axis::a:
        data.informative = std::min(data.informative, point);
        data.noise = point - data.informative;
        break;
      case Axis::m:
        cfg.m = point;
        break;
    }
    backends.emplace_back(io::partition(gen_synthetic(data), spec.partitions),
                          engine::Engine(engine::EngineConfig{spec.workers}));
    configs.push_back(cfg);
    TimingRow row;
    row.point = static_cast<double>(point);
    report.rows.push_back(std::move(row));
  }
  // Repetitions are interleaved across points so a burst of machine noise
  // does not land on a single point.
  for (std::size_t r = 0; r < spec.repetitions; ++r) {
    for (std::size_t i = 0; i < backends.size(); ++i) {
      report.rows[i].samples.push_back(time_rank(backends[i], configs[i]));
    }
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (auto& row : report.rows) {
    row.median_seconds = median(row.samples);
    xs.push_back(row.point);
    ys.push_back(row.median_seconds);
  }
  report.fit = linear_fit(xs, ys);
  return report;
}

SpeedupReport speedup_sweep(const relieff::InstanceDataset& dataset,
                            std::span<const std::size_t> worker_counts,
                            const core::RankConfig& cfg, std::size_t repetitions) {
  if (worker_counts.empty()) throw InvalidArgument("speedup sweep needs worker counts");
  if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  SpeedupReport report;
  bool first = true;
  for (auto workers : worker_counts) {
    relieff::LocalBackend backend(dataset, engine::Engine(engine::EngineConfig{workers}));
    TimingRow row;
    row.point = static_cast<double>(workers);
    for (std::size_t r = 0; r < repetitions; ++r) {
      core::WeightVector weights;
      row.samples.push_back(time_rank(backend, cfg, &weights));
      if (first) {
        report.weights = weights;
        first = false;
      } else if (weights != report.weights) {
        report.weights_identical = false;
      }
    }
    row.median_seconds = median(row.samples);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string report_preamble(std::uint64_t seed, const std::string& config) {
  std::ostringstream out;
  out << "# version=" << version() << '\n' << "# seed=" << seed << '\n' << "# config=" << config
      << '\n';
  return out.str();
}

void write_timing_csv(const std::filesystem::path& path, const std::string& preamble,
                      const std::string& point_name, const std::vector<TimingRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << preamble << point_name << ",median_seconds\n";
  for (const auto& row : rows) {
    out << io::format_double(row.point) << ',' << io::format_double(row.median_seconds) << '\n';
  }
}

void write_plot_data(const std::filesystem::path& path, const std::string& preamble,
                     const std::vector<std::pair<double, double>>& points) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << preamble << "x y\n";
  for (const auto& [x, y] : points) {
    out << io::format_double(x) << ' ' << io::format_double(y) << '\n';
  }
}

}  // namespace direlieff::bench
