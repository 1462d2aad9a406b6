// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion 4   run one

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "direlieff/bench.hpp"
#include "direlieff/cluster.hpp"
#include "direlieff/pipeline.hpp"
#include "direlieff/reference.hpp"
#include "direlieff/wire.hpp"
#include "support.hpp"

using namespace direlieff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string weights_file(const core::Schema& schema, const core::WeightVector& w) {
  std::ostringstream out;
  relieff::write_weights_csv(out, schema, w, core::rank_features(w));
  return out.str();
}

core::RankConfig rank_config(std::size_t m, std::size_t k, std::uint64_t seed) {
  core::RankConfig cfg;
  cfg.m = m;
  cfg.k = k;
  cfg.seed = seed;
  return cfg;
}

// --- criteria 1 and 3 share one randomized corpus -------------------------

struct CorpusRun {
  double max_abs_diff = 0.0;
  double min_weight = 0.0;
  double max_weight = 0.0;
};

CorpusRun run_corpus() {
  std::mt19937_64 rng(20160701);
  CorpusRun out;
  out.min_weight = 1.0;
  out.max_weight = -1.0;
  for (int trial = 0; trial < 100; ++trial) {
    testing::RandomShape shape;
    shape.n = 10 + rng() % 1991;
    shape.a = 1 + rng() % 50;
    shape.classes = 2 + rng() % 4;
    shape.nominal_share = static_cast<double>(rng() % 5) / 4.0;
    shape.categories = 2 + rng() % 4;
    shape.levels = trial % 4 == 0 ? 5 : 0;
    const auto ds = testing::random_dataset(shape, rng);

    auto cfg = rank_config(1 + rng() % 50, 1 + rng() % 10, rng());
    if (trial % 2 == 1) {
      cfg.diff.numeric_mode = core::NumericDiff::ramp;
      cfg.diff.t_eq = 0.05 * static_cast<double>(rng() % 5);
      cfg.diff.t_diff = cfg.diff.t_eq + 0.05 + 0.05 * static_cast<double>(rng() % 5);
    }
    const std::size_t partitions = 1 + rng() % 8;
    const std::size_t workers = 1 + rng() % 4;
    relieff::LocalBackend backend(io::partition(ds, partitions),
                                  engine::Engine(engine::EngineConfig{workers}));
    const auto result = relieff::rank(backend, cfg);
    const auto oracle = reference::relieff_sequential(ds.schema, ds.instances, result.samples,
                                                      cfg.k, cfg.diff);
    for (std::size_t a = 0; a < oracle.size(); ++a) {
      out.max_abs_diff = std::max(out.max_abs_diff, std::abs(oracle[a] - result.weights[a]));
      out.min_weight = std::min(out.min_weight, result.weights[a]);
      out.max_weight = std::max(out.max_weight, result.weights[a]);
    }
  }
  return out;
}

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  const auto run = run_corpus();
  const double elapsed = seconds_since(start);
  const bool pass = run.max_abs_diff <= 1e-12 && elapsed <= 120.0;
  return {pass, "100 configs, max_abs_diff=" + fmt(run.max_abs_diff) + " (limit 1e-12), " +
                    fmt(elapsed) + " s (limit 120 s)"};
}

Outcome weight_range() {
  const auto run = run_corpus();
  const bool corpus_ok = run.min_weight >= -1.0 && run.max_weight <= 1.0;

  // Feature 0 copies the class, so every miss differs on it by exactly 1:
  // numeric 0/1 for two classes, a nominal copy for three.
  double gap = 0.0;
  for (std::size_t classes : {2, 3}) {
    bench::SyntheticSpec spec;
    spec.n = 1500;
    spec.informative = 0;
    spec.noise = 6;
    spec.classes = classes;
    spec.seed = 5;
    auto ds = bench::gen_synthetic(spec);
    if (classes > 2) {
      auto& f = ds.schema.mutable_features()[0];
      f.kind = core::FeatureKind::nominal;
      f.categories = ds.schema.class_labels();
    }
    for (auto& inst : ds.instances) inst.values[0] = static_cast<double>(inst.label);
    relieff::LocalBackend backend(io::partition(ds, 4), engine::Engine());
    const auto w = relieff::rank(backend, rank_config(100, 10, 7)).weights;
    gap = std::max(gap, std::abs(w[0] - 1.0));
  }
  const bool pass = corpus_ok && gap <= 1e-9;
  return {pass, "corpus weights in [" + fmt(run.min_weight) + ", " + fmt(run.max_weight) +
                    "], class-copy feature max |W-1|=" + fmt(gap) + " (limit 1e-9)"};
}

// --- criterion 2 -------------------------------------------------------------

Outcome invariance() {
  const auto start = Clock::now();
  bench::SyntheticSpec spec;
  spec.n = 100000;
  spec.seed = 2;
  const auto flat = bench::gen_synthetic(spec);
  const auto cfg = rank_config(10, 10, 11);

  std::vector<std::pair<std::string, std::string>> files;
  for (std::size_t partitions : {1, 2, 4, 8}) {
    relieff::LocalBackend backend(io::partition(flat, partitions), engine::Engine());
    files.emplace_back("local/p" + std::to_string(partitions),
                       weights_file(flat.schema, relieff::rank(backend, cfg).weights));
  }
  // a worker serves one driver session, so each run gets fresh workers
  for (std::size_t partitions : {2, 8}) {
    testing::WorkerProcess w0(DIRELIEFF_BIN, "w0");
    testing::WorkerProcess w1(DIRELIEFF_BIN, "w1");
    cluster::ClusterBackend backend({w0.endpoint(), w1.endpoint()},
                                    io::partition(flat, partitions));
    files.emplace_back("cluster2/p" + std::to_string(partitions),
                       weights_file(flat.schema, relieff::rank(backend, cfg).weights));
  }
  std::string mismatched;
  for (const auto& [name, text] : files) {
    if (text != files.front().second) mismatched += " " + name;
  }
  const double elapsed = seconds_since(start);
  const bool pass = mismatched.empty() && elapsed <= 120.0;
  return {pass, std::to_string(files.size()) + " weight files " +
                    (mismatched.empty() ? "byte-identical" : "differ:" + mismatched) + ", " +
                    fmt(elapsed) + " s (limit 120 s)"};
}

// --- criterion 4 -------------------------------------------------------------

Outcome linear_complexity() {
  const auto start = Clock::now();
  bench::ScalingSpec base;
  base.data.n = 100000;
  base.data.informative = 5;
  base.data.noise = 15;
  base.data.seed = 3;
  base.rank = rank_config(10, 10, 3);
  base.workers = 1;
  base.partitions = 4;
  base.repetitions = 7;

  struct Sweep {
    bench::Axis axis;
    std::vector<std::size_t> points;
  };
  const std::vector<Sweep> sweeps{{bench::Axis::n, {50000, 100000, 200000}},
                                  {bench::Axis::a, {10, 20, 40}},
                                  {bench::Axis::m, {10, 20, 40}}};
  bool ok = true;
  std::string detail;
  for (const auto& sweep : sweeps) {
    auto spec = base;
    spec.axis = sweep.axis;
    spec.points = sweep.points;
    const auto report = bench::scaling_sweep(spec);
    double worst = 0.0;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
      worst = std::max(worst, report.rows[i].median_seconds / report.rows[i - 1].median_seconds);
    }
    ok = ok && worst <= 2.6;
    detail += bench::to_string(sweep.axis) + ": max ratio " + fmt(worst) + " R2=" +
              fmt(report.fit.r_squared) + "; ";
  }
  const double elapsed = seconds_since(start);
  return {ok && elapsed <= 600.0, detail + "limit 2.6 per doubling, " + fmt(elapsed) +
                                      " s (limit 600 s)"};
}

// --- criterion 5 -------------------------------------------------------------

Outcome scalability() {
  const auto start = Clock::now();
  bench::SyntheticSpec spec;
  spec.n = 1000000;
  spec.seed = 4;
  const auto ds = io::partition(bench::gen_synthetic(spec), 8);

  // pick m so that a 1-worker run takes at least 5 s
  std::size_t m = 10;
  double single = 0.0;
  for (;;) {
    relieff::LocalBackend backend(ds, engine::Engine());
    const auto t0 = Clock::now();
    relieff::rank(backend, rank_config(m, 10, 4));
    single = seconds_since(t0);
    if (single >= 5.0) break;
    const double scale = std::clamp(6.0 / std::max(single, 1e-3), 1.2, 10.0);
    m = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * scale));
  }
  const std::vector<std::size_t> workers{1, 4};
  const auto report = bench::speedup_sweep(ds, workers, rank_config(m, 10, 4), 3);
  const double t1 = report.rows[0].median_seconds;
  const double t4 = report.rows[1].median_seconds;
  const double elapsed = seconds_since(start);
  const bool pass = t4 <= 0.6 * t1 && report.weights_identical && elapsed <= 600.0;
  return {pass, "m=" + std::to_string(m) + ", time(1)=" + fmt(t1) + " s, time(4)=" + fmt(t4) +
                    " s, ratio " + fmt(t4 / t1) + " (limit 0.6), weights " +
                    (report.weights_identical ? "identical" : "DIFFER") + ", " +
                    std::to_string(std::thread::hardware_concurrency()) + " hardware threads, " +
                    fmt(elapsed) + " s (limit 600 s)"};
}

// --- criterion 6 -------------------------------------------------------------

Outcome stability() {
  const auto start = Clock::now();
  bench::SyntheticSpec spec;
  spec.n = 100000;
  spec.seed = 6;
  const auto ds = io::partition(bench::gen_synthetic(spec), 4);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
  for (std::uint64_t p = 0; p < 5; ++p) pairs.emplace_back(100 + 2 * p, 101 + 2 * p);
  const std::vector<std::size_t> ms{10, 100};
  const auto curve = bench::stability_curve(ds, engine::Engine(), ms, 10, pairs);
  const double at10 = curve[0].mean_avg_diff;
  const double at100 = curve[1].mean_avg_diff;
  const double elapsed = seconds_since(start);
  const bool pass = at100 < at10 && at100 <= 0.5 * at10 && elapsed <= 300.0;
  return {pass, "AvgDiff(m=10)=" + fmt(at10, 4) + ", AvgDiff(m=100)=" + fmt(at100, 4) +
                    ", ratio " + fmt(at100 / at10) + " (limit 0.5), " + fmt(elapsed) +
                    " s (limit 300 s)"};
}

// --- criterion 7 -------------------------------------------------------------

Outcome relevance() {
  const auto start = Clock::now();
  int recovered = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    bench::SyntheticSpec spec;
    spec.n = 2000;
    spec.informative = 5;
    spec.noise = 15;
    spec.seed = seed;
    relieff::LocalBackend backend(io::partition(bench::gen_synthetic(spec), 4), engine::Engine());
    const auto r = relieff::rank(backend, rank_config(200, 10, seed));
    const bool top = std::all_of(r.ranking.begin(), r.ranking.begin() + 5,
                                 [&](std::size_t a) { return a < spec.informative; });
    recovered += top ? 1 : 0;
  }
  const double elapsed = seconds_since(start);
  return {recovered >= 9 && elapsed <= 120.0,
          std::to_string(recovered) + "/10 seeds rank the informative features first (need 9), " +
              fmt(elapsed) + " s (limit 120 s)"};
}

// --- criterion 8 -------------------------------------------------------------

template <class T>
engine::PartitionedDataset<T> random_split(const std::vector<T>& values, std::size_t parts,
                                           std::mt19937_64& rng) {
  std::vector<std::size_t> cuts{0, values.size()};
  for (std::size_t p = 1; p < parts; ++p) cuts.push_back(rng() % (values.size() + 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::vector<T>> blocks;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    blocks.emplace_back(values.begin() + cuts[p], values.begin() + cuts[p + 1]);
  }
  return engine::PartitionedDataset<T>(std::move(blocks));
}

Outcome engine_laws() {
  const auto start = Clock::now();
  std::mt19937_64 rng(8);
  constexpr int kCases = 1000;
  int aggregate_ok = 0;
  int sample_ok = 0;
  int wire_ok = 0;

  for (int trial = 0; trial < kCases; ++trial) {
    // integer sum, max and a per-class counter must equal their sequential folds
    std::vector<core::Instance> values(rng() % 80);
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = {i, static_cast<std::uint32_t>(rng() % 4),
                   {static_cast<double>(static_cast<std::int64_t>(rng() % 2001) - 1000)}};
    }
    engine::Engine eng(engine::EngineConfig{1 + rng() % 4});
    const auto ds = random_split(values, 1 + rng() % 8, rng);
    long long seq_sum = 0;
    std::vector<std::uint64_t> seq_counts(4, 0);
    for (const auto& v : values) {
      seq_sum += static_cast<long long>(v.values[0]);
      ++seq_counts[v.label];
    }
    const auto sum = eng.aggregate(
        ds, 0LL,
        [](long long& acc, const core::Instance& x) {
          acc += static_cast<long long>(x.values[0]);
        },
        [](long long& into, long long from) { into += from; });
    const auto counts = relieff::class_count_stage(eng, ds, 4);
    bool ok = sum == seq_sum && counts == seq_counts;
    if (!values.empty()) {
      const auto bounds = relieff::bounds_stage(eng, ds);
      double lo = values[0].values[0];
      double hi = lo;
      for (const auto& v : values) {
        lo = std::min(lo, v.values[0]);
        hi = std::max(hi, v.values[0]);
      }
      ok = ok && bounds && bounds->min[0] == lo && bounds->max[0] == hi;
    }
    aggregate_ok += ok ? 1 : 0;

    // take_sample depends only on (elements, m, seed)
    if (values.empty()) values.push_back({0, 0, {1.0}});
    const auto m = 1 + rng() % values.size();
    const auto seed = rng();
    const auto whole =
        eng.take_sample(engine::PartitionedDataset<core::Instance>({values}), m, seed);
    const auto split = eng.take_sample(random_split(values, 1 + rng() % 8, rng), m, seed);
    std::vector<std::uint64_t> ids;
    for (const auto& x : whole) ids.push_back(x.id);
    std::sort(ids.begin(), ids.end());
    const bool distinct = std::adjacent_find(ids.begin(), ids.end()) == ids.end();
    sample_ok += (whole == split && whole.size() == m && distinct) ? 1 : 0;

    // frame round trip, with an instance payload half of the time
    cluster::Frame frame;
    frame.type = static_cast<cluster::MessageType>(1 + rng() % 6);
    if (trial % 2 == 0) {
      cluster::ByteWriter w;
      cluster::write_instances(w, values, 1);
      frame.payload = w.take();
    } else {
      frame.payload.resize(rng() % 512);
      for (auto& b : frame.payload) b = static_cast<std::uint8_t>(rng());
    }
    bool wire = false;
    try {
      const auto bytes = cluster::encode_frame(frame);
      const auto back = cluster::decode_frame(bytes);
      wire = back == frame && cluster::encode_frame(back) == bytes;
      if (wire && trial % 2 == 0) {
        cluster::ByteReader r(back.payload);
        wire = cluster::read_instances(r, 1) == values;
        r.expect_end();
      }
    } catch (const std::exception&) {
      wire = false;
    }
    wire_ok += wire ? 1 : 0;
  }
  const double elapsed = seconds_since(start);
  const bool pass = aggregate_ok == kCases && sample_ok == kCases && wire_ok == kCases &&
                    elapsed <= 60.0;
  return {pass, "aggregate " + std::to_string(aggregate_ok) + "/" + std::to_string(kCases) +
                    ", take_sample " + std::to_string(sample_ok) + "/" + std::to_string(kCases) +
                    ", wire " + std::to_string(wire_ok) + "/" + std::to_string(kCases) + ", " +
                    fmt(elapsed) + " s (limit 60 s)"};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", oracle_equivalence},
      {2, "partition and backend invariance", invariance},
      {3, "weight range", weight_range},
      {4, "linear empirical complexity", linear_complexity},
      {5, "scalability with workers", scalability},
      {6, "stability improves with m", stability},
      {7, "relevance recovery", relevance},
      {8, "engine laws", engine_laws},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.number != only) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << c.number << " " << (outcome.pass ? "PASS" : "FAIL") << " "
              << c.name << ": " << outcome.detail << std::endl;
    failures += outcome.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
