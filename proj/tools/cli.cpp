#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "direlieff/bench.hpp"
#include "direlieff/cluster.hpp"
#include "direlieff/ingestion.hpp"
#include "direlieff/pipeline.hpp"
#include "direlieff/reference.hpp"

namespace direlieff::cli {

namespace {

constexpr double kCompareTolerance = 1e-12;

/// Thrown for flag combinations CLI11 cannot express; maps to exit 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct DataFlags {
  std::string input;
  std::string format = "csv";
  std::string schema;
  std::size_t num_features = 0;
  std::size_t partitions = 1;
  bool cache = false;

  void add(CLI::App& app, bool required = true) {
    auto* opt = app.add_option("--input", input, "dataset file (csv with header, or libsvm)");
    if (required) opt->required();
    app.add_option("--format", format, "input format")
        ->check(CLI::IsMember({"csv", "libsvm"}))
        ->capture_default_str();
    app.add_option("--schema", schema, "JSON schema sidecar");
    app.add_option("--num-features", num_features, "libsvm feature count when no sidecar");
    app.add_option("--partitions", partitions, "number of contiguous partitions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--cache", cache, "retain derived partition blocks (materialize)");
  }

  io::DatasetSource source() const {
    io::DatasetSource src;
    src.path = input;
    src.format = io::parse_format(format);
    if (!schema.empty()) src.schema_sidecar = schema;
    if (num_features > 0) src.num_features = num_features;
    return src;
  }

  relieff::InstanceDataset load() const {
    auto ds = io::load(source(), partitions);
    return ds.cached(cache);
  }
};

struct RankFlags {
  std::size_t k = 10;
  std::size_t m = 10;
  std::uint64_t seed = 1;
  std::string diff = "linear";
  double t_eq = 0.05;
  double t_diff = 0.10;
  std::string divisor = "k";

  void add(CLI::App& app) {
    app.add_option("--k", k, "neighbors per class")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--m", m, "number of sampled instances")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", seed, "sampling seed")->capture_default_str();
    app.add_option("--diff", diff, "numeric diff function")
        ->check(CLI::IsMember({"linear", "ramp"}))
        ->capture_default_str();
    app.add_option("--t-eq", t_eq, "ramp equality threshold (fraction of range)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--t-diff", t_diff, "ramp difference threshold (fraction of range)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--sdif-divisor", divisor,
                   "divide neighbor difference sums by k or by the neighbors found")
        ->check(CLI::IsMember({"k", "count"}))
        ->capture_default_str();
  }

  core::RankConfig config() const {
    core::RankConfig cfg;
    cfg.k = k;
    cfg.m = m;
    cfg.seed = seed;
    cfg.diff.numeric_mode = diff == "ramp" ? core::NumericDiff::ramp : core::NumericDiff::linear;
    cfg.diff.t_eq = t_eq;
    cfg.diff.t_diff = t_diff;
    cfg.divisor = divisor == "count" ? core::SdifDivisor::neighbor_count : core::SdifDivisor::k;
    try {
      cfg.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }

  std::string describe() const {
    std::ostringstream s;
    s << "k=" << k << ";m=" << m << ";diff=" << diff;
    if (diff == "ramp") s << ";t_eq=" << t_eq << ";t_diff=" << t_diff;
    s << ";sdif_divisor=" << divisor;
    return s.str();
  }
};

std::vector<std::size_t> parse_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a non-negative integer");
    }
  }
  if (out.empty()) throw UsageError(flag + " needs at least one value");
  return out;
}

std::vector<cluster::Endpoint> parse_endpoints(const std::string& text) {
  std::vector<cluster::Endpoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(cluster::Endpoint::parse(item));
    } catch (const InvalidArgument& e) {
      throw UsageError(std::string("--cluster-workers: ") + e.what());
    }
  }
  return out;
}

void print_summary(std::ostream& out, const core::Schema& schema, const relieff::RankResult& r) {
  out << "top features (of " << r.weights.size() << "), m=" << r.samples.size() << ":\n";
  const std::size_t shown = std::min<std::size_t>(10, r.ranking.size());
  for (std::size_t i = 0; i < shown; ++i) {
    const auto a = r.ranking[i];
    char line[256];
    std::snprintf(line, sizeof line, "%3zu  %-24s % .6f\n", i + 1, schema.feature(a).name.c_str(),
                  r.weights[a]);
    out << line;
  }
}

/// DIRELIEFF_WORKERS as a positive count; unset or empty means no override.
std::optional<std::size_t> workers_from_env() {
  const char* text = std::getenv("DIRELIEFF_WORKERS");
  if (!text || !*text) return std::nullopt;
  const std::string value(text);
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || n == 0 || value[0] == '-') {
    throw UsageError("DIRELIEFF_WORKERS must be a positive integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(n);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw Error("failed writing '" + path + "'");
}

}  // namespace

std::string format_scientific(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1e", value);
  std::string text(buf);
  const auto e = text.find('e');
  if (e == std::string::npos) return text;
  std::string mantissa = text.substr(0, e);
  std::string exponent = text.substr(e + 1);
  bool negative = false;
  if (!exponent.empty() && (exponent[0] == '+' || exponent[0] == '-')) {
    negative = exponent[0] == '-';
    exponent.erase(0, 1);
  }
  exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
  return mantissa + "e" + (negative ? "-" : "") + exponent;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DiReliefF: partition-parallel ReliefF feature ranking", "direlieff"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bench::version());

  // options that fall back to DIRELIEFF_WORKERS when not given
  struct EnvWorkers {
    CLI::App* command;
    CLI::Option* option;
    std::size_t* target;
  };
  std::vector<EnvWorkers> env_workers;
  auto add_workers = [&](CLI::App* command, const std::string& flag, std::size_t& target,
                         const std::string& help) {
    auto* opt = command->add_option(flag, target, help + " (default: $DIRELIEFF_WORKERS or 1)")
                    ->check(CLI::PositiveNumber);
    env_workers.push_back({command, opt, &target});
  };

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "rank the features of a dataset");
  DataFlags rank_data;
  RankFlags rank_flags;
  std::size_t workers = 1;
  std::string backend = "local";
  std::string cluster_workers;
  std::size_t max_result_bytes = std::size_t{6} << 30;
  std::string rank_output;
  rank_data.add(*rank_cmd);
  rank_flags.add(*rank_cmd);
  add_workers(rank_cmd, "--workers", workers, "local worker threads");
  rank_cmd->add_option("--backend", backend, "execution backend")
      ->check(CLI::IsMember({"local", "cluster"}))
      ->capture_default_str();
  rank_cmd->add_option("--cluster-workers", cluster_workers,
                       "comma-separated host:port list of running workers");
  rank_cmd->add_option("--max-result-bytes", max_result_bytes,
                       "cap on aggregate results returned to the driver")
      ->capture_default_str();
  rank_cmd->add_option("--output", rank_output, "weights csv to write");

  // compare
  auto* compare_cmd =
      app.add_subcommand("compare", "check the partitioned pipeline against the sequential oracle");
  DataFlags compare_data;
  RankFlags compare_flags;
  std::size_t compare_workers = 1;
  double inject_error = 0.0;
  compare_data.add(*compare_cmd);
  compare_flags.add(*compare_cmd);
  add_workers(compare_cmd, "--workers", compare_workers, "local worker threads");
  compare_cmd->add_option("--inject-error", inject_error)->group("");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic dataset (csv + schema sidecar)");
  bench::SyntheticSpec gen_spec;
  std::string gen_output;
  gen_cmd->add_option("--n", gen_spec.n, "instances")->capture_default_str();
  gen_cmd->add_option("--informative", gen_spec.informative, "class-dependent features")
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen_spec.noise, "class-independent features")
      ->capture_default_str();
  gen_cmd->add_option("--classes", gen_spec.classes, "number of classes")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen_spec.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--flip", gen_spec.flip_prob, "label flip probability in [0, 0.5)")
      ->capture_default_str();
  gen_cmd->add_option("--output", gen_output, "output prefix; writes <prefix>.csv and "
                                              "<prefix>.schema.json")
      ->required();

  // stability
  auto* stab_cmd = app.add_subcommand("stability", "AvgDiff between rankings of seed pairs");
  DataFlags stab_data;
  std::string stab_m_values = "10,50,100";
  std::size_t stab_pairs = 5;
  std::size_t stab_k = 10;
  std::uint64_t stab_seed = 1;
  std::size_t stab_workers = 1;
  std::string stab_output;
  std::string stab_plot;
  stab_data.add(*stab_cmd);
  stab_cmd->add_option("--m-values", stab_m_values, "comma-separated sample sizes")
      ->capture_default_str();
  stab_cmd->add_option("--pairs", stab_pairs, "seed pairs per sample size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  stab_cmd->add_option("--k", stab_k, "neighbors per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  stab_cmd->add_option("--seed", stab_seed, "first seed; pair p uses seed+2p and seed+2p+1")
      ->capture_default_str();
  add_workers(stab_cmd, "--workers", stab_workers, "local worker threads");
  stab_cmd->add_option("--output", stab_output, "table csv");
  stab_cmd->add_option("--plot", stab_plot, "plot data file (x y)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "timing sweeps on synthetic data");
  std::string bench_sweep = "scaling";
  std::string bench_axis = "n";
  std::string bench_points;
  std::string bench_worker_counts = "1,2,4";
  bench::SyntheticSpec bench_data;
  bench_data.n = 100000;
  std::size_t bench_m = 10;
  std::size_t bench_k = 10;
  std::size_t bench_workers = 1;
  std::size_t bench_partitions = 0;
  std::size_t bench_reps = 3;
  std::string bench_output;
  std::string bench_plot;
  bench_cmd->add_option("--sweep", bench_sweep, "scaling or speedup")
      ->check(CLI::IsMember({"scaling", "speedup"}))
      ->capture_default_str();
  bench_cmd->add_option("--axis", bench_axis, "scaling axis")
      ->check(CLI::IsMember({"n", "a", "m"}))
      ->capture_default_str();
  bench_cmd->add_option("--points", bench_points, "comma-separated values along the axis");
  bench_cmd->add_option("--worker-counts", bench_worker_counts, "speedup worker counts")
      ->capture_default_str();
  bench_cmd->add_option("--n", bench_data.n, "instances")->capture_default_str();
  bench_cmd->add_option("--informative", bench_data.informative)->capture_default_str();
  bench_cmd->add_option("--noise", bench_data.noise)->capture_default_str();
  bench_cmd->add_option("--classes", bench_data.classes)->capture_default_str();
  bench_cmd->add_option("--seed", bench_data.seed)->capture_default_str();
  bench_cmd->add_option("--m", bench_m)->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--k", bench_k)->check(CLI::PositiveNumber)->capture_default_str();
  add_workers(bench_cmd, "--workers", bench_workers, "worker threads for scaling sweeps");
  bench_cmd->add_option("--partitions", bench_partitions,
                        "partitions (default: max of workers and worker counts)");
  bench_cmd->add_option("--reps", bench_reps, "repetitions per point (median reported)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--output", bench_output, "table csv");
  bench_cmd->add_option("--plot", bench_plot, "plot data file (x y)");

  // worker
  auto* worker_cmd = app.add_subcommand("worker", "serve partitions to a cluster driver");
  std::string listen = "127.0.0.1:0";
  cluster::WorkerOptions worker_opts;
  worker_cmd->add_option("--listen", listen, "host:port to listen on (port 0 picks one)")
      ->capture_default_str();
  add_workers(worker_cmd, "--threads", worker_opts.threads, "threads per stage");
  worker_cmd->add_option("--max-result-bytes", worker_opts.max_result_bytes)
      ->capture_default_str();
  worker_cmd->add_option("--name", worker_opts.name, "name reported to the driver")
      ->capture_default_str();

  std::vector<std::string> argv_storage;
  argv_storage.push_back("direlieff");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << bench::version() << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << "run 'direlieff " << sub->get_name() << " --help' for usage\n";
    }
    return exit_usage;
  }

  try {
    for (const auto& e : env_workers) {
      if (e.command->parsed() && e.option->count() == 0) {
        if (auto v = workers_from_env()) *e.target = *v;
      }
    }

    if (rank_cmd->parsed()) {
      const auto cfg = rank_flags.config();
      if (backend == "cluster" && cluster_workers.empty()) {
        throw UsageError("--backend cluster requires --cluster-workers <host:port,...>");
      }
      const auto dataset = rank_data.load();
      std::unique_ptr<relieff::ExecutionBackend> exec;
      if (backend == "cluster") {
        auto endpoints = parse_endpoints(cluster_workers);
        if (endpoints.empty()) {
          throw UsageError("--backend cluster requires --cluster-workers <host:port,...>");
        }
        cluster::ClusterOptions opts;
        opts.max_result_bytes = max_result_bytes;
        exec = std::make_unique<cluster::ClusterBackend>(std::move(endpoints), dataset, opts);
      } else {
        exec = std::make_unique<relieff::LocalBackend>(
            dataset, engine::Engine(engine::EngineConfig{workers, max_result_bytes}));
      }
      const auto result = relieff::rank(*exec, cfg, &err);
      if (!rank_output.empty()) {
        std::ostringstream table;
        relieff::write_weights_csv(table, exec->schema(), result.weights, result.ranking);
        write_file(rank_output, table.str());
      }
      print_summary(out, exec->schema(), result);
      return exit_ok;
    }

    if (compare_cmd->parsed()) {
      const auto cfg = compare_flags.config();
      const auto dataset = compare_data.load();
      relieff::LocalBackend exec(dataset, engine::Engine(engine::EngineConfig{compare_workers}));
      auto result = relieff::rank(exec, cfg, &err);
      if (inject_error != 0.0 && !result.weights.empty()) result.weights[0] += inject_error;
      const auto flat = dataset.collect();
      const auto oracle = reference::relieff_sequential(exec.schema(), flat, result.samples,
                                                        cfg.k, cfg.diff);
      double worst = 0.0;
      for (std::size_t a = 0; a < oracle.size(); ++a) {
        worst = std::max(worst, std::abs(oracle[a] - result.weights[a]));
      }
      out << "max_abs_diff=" << format_scientific(worst) << '\n';
      if (cfg.divisor != core::SdifDivisor::k) {
        err << "note: the sequential oracle always divides by k\n";
      }
      return worst <= kCompareTolerance ? exit_ok : exit_runtime;
    }

    if (gen_cmd->parsed()) {
      if (!(gen_spec.flip_prob >= 0.0 && gen_spec.flip_prob < 0.5)) {
        throw UsageError("--flip must lie in [0, 0.5)");
      }
      const auto [csv, sidecar] = bench::write_synthetic(gen_spec, gen_output);
      out << "wrote " << csv.string() << " and " << sidecar.string() << '\n';
      return exit_ok;
    }

    if (stab_cmd->parsed()) {
      const auto m_values = parse_list(stab_m_values, "--m-values");
      if (std::find(m_values.begin(), m_values.end(), 0) != m_values.end()) {
        throw UsageError("--m-values must be positive");
      }
      const auto dataset = stab_data.load();
      std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
      for (std::size_t p = 0; p < stab_pairs; ++p) {
        pairs.emplace_back(stab_seed + 2 * p, stab_seed + 2 * p + 1);
      }
      const auto curve =
          bench::stability_curve(dataset, engine::Engine(engine::EngineConfig{stab_workers}),
                                 m_values, stab_k, pairs);
      const auto preamble = bench::report_preamble(
          stab_seed, "input=" + stab_data.input + ";k=" + std::to_string(stab_k) +
                         ";pairs=" + std::to_string(stab_pairs) + ";m_values=" + stab_m_values);
      std::ostringstream table;
      table << preamble << "m,mean_avg_diff\n";
      std::vector<std::pair<double, double>> plot;
      for (const auto& p : curve) {
        table << p.m << ',' << io::format_double(p.mean_avg_diff) << '\n';
        plot.emplace_back(static_cast<double>(p.m), p.mean_avg_diff);
      }
      if (!stab_output.empty()) write_file(stab_output, table.str());
      if (!stab_plot.empty()) bench::write_plot_data(stab_plot, preamble, plot);
      out << table.str();
      return exit_ok;
    }

    if (bench_cmd->parsed()) {
      if (bench_sweep == "scaling") {
        if (bench_points.empty()) throw UsageError("--points is required for a scaling sweep");
        bench::ScalingSpec spec;
        spec.data = bench_data;
        spec.axis = bench::parse_axis(bench_axis);
        spec.points = parse_list(bench_points, "--points");
        if (spec.points.size() < 3) {
          throw UsageError("a scaling sweep needs at least 3 --points, got " +
                           std::to_string(spec.points.size()));
        }
        spec.rank.m = bench_m;
        spec.rank.k = bench_k;
        spec.rank.seed = bench_data.seed;
        spec.workers = bench_workers;
        spec.partitions = bench_partitions > 0 ? bench_partitions : bench_workers;
        spec.repetitions = bench_reps;
        const auto report = bench::scaling_sweep(spec);
        std::ostringstream config;
        config << "sweep=scaling;axis=" << bench_axis << ";n=" << bench_data.n
               << ";informative=" << bench_data.informative << ";noise=" << bench_data.noise
               << ";classes=" << bench_data.classes << ";m=" << bench_m << ";k=" << bench_k
               << ";workers=" << bench_workers << ";partitions=" << spec.partitions
               << ";reps=" << bench_reps;
        const auto preamble = bench::report_preamble(bench_data.seed, config.str());
        if (!bench_output.empty()) {
          bench::write_timing_csv(bench_output, preamble, bench_axis, report.rows);
        }
        std::vector<std::pair<double, double>> plot;
        out << preamble << bench_axis << ",median_seconds\n";
        for (const auto& row : report.rows) {
          out << io::format_double(row.point) << ',' << io::format_double(row.median_seconds)
              << '\n';
          plot.emplace_back(row.point, row.median_seconds);
        }
        out << "# linear fit r_squared=" << io::format_double(report.fit.r_squared) << '\n';
        if (!bench_plot.empty()) bench::write_plot_data(bench_plot, preamble, plot);
        return exit_ok;
      }

      const auto counts = parse_list(bench_worker_counts, "--worker-counts");
      if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
        throw UsageError("--worker-counts must be positive");
      }
      const std::size_t partitions =
          bench_partitions > 0 ? bench_partitions : *std::max_element(counts.begin(), counts.end());
      const auto dataset = io::partition(bench::gen_synthetic(bench_data), partitions);
      core::RankConfig cfg;
      cfg.m = bench_m;
      cfg.k = bench_k;
      cfg.seed = bench_data.seed;
      const auto report = bench::speedup_sweep(dataset, counts, cfg, bench_reps);
      std::ostringstream config;
      config << "sweep=speedup;n=" << bench_data.n << ";informative=" << bench_data.informative
             << ";noise=" << bench_data.noise << ";classes=" << bench_data.classes
             << ";m=" << bench_m << ";k=" << bench_k << ";partitions=" << partitions
             << ";reps=" << bench_reps;
      const auto preamble = bench::report_preamble(bench_data.seed, config.str());
      if (!bench_output.empty()) {
        bench::write_timing_csv(bench_output, preamble, "workers", report.rows);
      }
      std::vector<std::pair<double, double>> plot;
      out << preamble << "workers,median_seconds\n";
      for (const auto& row : report.rows) {
        out << io::format_double(row.point) << ',' << io::format_double(row.median_seconds)
            << '\n';
        plot.emplace_back(row.point, row.median_seconds);
      }
      out << "# weights identical across worker counts: "
          << (report.weights_identical ? "yes" : "no") << '\n';
      if (!bench_plot.empty()) bench::write_plot_data(bench_plot, preamble, plot);
      return report.weights_identical ? exit_ok : exit_runtime;
    }

    if (worker_cmd->parsed()) {
      cluster::Endpoint endpoint;
      try {
        endpoint = cluster::Endpoint::parse(listen);
      } catch (const InvalidArgument& e) {
        throw UsageError(std::string("--listen: ") + e.what());
      }
      return cluster::serve_worker(endpoint, worker_opts, out, &err);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_usage;
}

}  // namespace direlieff::cli
