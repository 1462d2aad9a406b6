#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "cli.hpp"
#include "direlieff/ingestion.hpp"
#include "direlieff/reference.hpp"
#include "support.hpp"

using direlieff::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string toy = std::string(TEST_DATA_DIR) + "/toy.csv";

}  // namespace

TEST_CASE("scientific formatting without exponent padding") {
  CHECK(direlieff::cli::format_scientific(0.0) == "0.0e0");
  CHECK(direlieff::cli::format_scientific(1.5e-13) == "1.5e-13");
  CHECK(direlieff::cli::format_scientific(0.25) == "2.5e-1");
  CHECK(direlieff::cli::format_scientific(12.0) == "1.2e1");
}

TEST_CASE("rank writes the golden weights table for the toy dataset") {
  testing::TempDir dir;
  const auto out = (dir / "w.csv").string();
  auto r = invoke({"rank", "--input", toy, "--k", "1", "--m", "4", "--seed", "3", "--output", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("color") != std::string::npos);
  const auto golden = std::string(TEST_DATA_DIR) + "/toy_weights.csv";
  CHECK(testing::read_text(out) == testing::read_text(golden));

  direlieff::io::DatasetSource src;
  src.path = toy;
  const auto ds = direlieff::io::read_dataset(src);
  const auto w =
      direlieff::reference::relieff_sequential(ds.schema, ds.instances, ds.instances, 1, {});
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  const auto again = (dir / "again.csv").string();
  CHECK(invoke({"rank", "--input", toy, "--k", "1", "--m", "4", "--seed", "3", "--partitions",
                "3", "--workers", "2", "--cache", "--output", again})
            .code == 0);
  CHECK(testing::read_text(again) == testing::read_text(out));
}

TEST_CASE("usage errors exit with 2") {
  auto zero_m = invoke({"rank", "--input", toy, "--m", "0"});
  CHECK(zero_m.code == 2);
  CHECK(zero_m.err.find("--m") != std::string::npos);

  auto cluster = invoke({"rank", "--input", toy, "--backend", "cluster"});
  CHECK(cluster.code == 2);
  CHECK(cluster.err.find("--cluster-workers") != std::string::npos);

  CHECK(invoke({}).code == 2);
  CHECK(invoke({"rank"}).code == 2);
  CHECK(invoke({"rank", "--input", toy, "--diff", "cubic"}).code == 2);
  CHECK(invoke({"rank", "--input", toy, "--diff", "ramp", "--t-eq", "0.2", "--t-diff", "0.1"})
            .code == 2);
  CHECK(invoke({"bogus"}).code == 2);

  auto bench = invoke({"bench", "--sweep", "scaling", "--axis", "n", "--points", "100,200"});
  CHECK(bench.code == 2);
  CHECK(bench.err.find("at least 3") != std::string::npos);
}

TEST_CASE("runtime errors exit with 1") {
  auto missing = invoke({"rank", "--input", "/nonexistent/file.csv"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("/nonexistent/file.csv") != std::string::npos);
}

TEST_CASE("worker count falls back to the environment") {
  setenv("DIRELIEFF_WORKERS", "0", 1);
  CHECK(invoke({"rank", "--input", toy}).code == 2);
  setenv("DIRELIEFF_WORKERS", "2", 1);
  CHECK(invoke({"rank", "--input", toy, "--m", "4"}).code == 0);
  unsetenv("DIRELIEFF_WORKERS");
}

TEST_CASE("compare against the oracle") {
  auto ok = invoke({"compare", "--input", toy, "--k", "1", "--m", "4"});
  CHECK(ok.code == 0);
  CHECK(ok.out == "max_abs_diff=0.0e0\n");

  auto bad = invoke({"compare", "--input", toy, "--inject-error", "1e-6"});
  CHECK(bad.code == 1);
  CHECK(bad.out == "max_abs_diff=1.0e-6\n");

  auto clamped = invoke({"compare", "--input", toy, "--m", "9"});
  CHECK(clamped.code == 0);
  CHECK(clamped.err.find("m=9 exceeds n=4") != std::string::npos);
}

TEST_CASE("gen, stability and bench") {
  testing::TempDir dir;
  const auto a = (dir / "a").string();
  const auto b = (dir / "b").string();
  CHECK(invoke({"gen", "--n", "120", "--seed", "4", "--output", a}).code == 0);
  CHECK(invoke({"gen", "--n", "120", "--seed", "4", "--output", b}).code == 0);
  CHECK(testing::read_text(a + ".csv") == testing::read_text(b + ".csv"));
  CHECK(invoke({"gen", "--flip", "0.6", "--output", a}).code == 2);

  const auto table = (dir / "stab.csv").string();
  const auto plot = (dir / "stab.dat").string();
  auto stab = invoke({"stability", "--input", a + ".csv", "--schema", a + ".schema.json",
                      "--m-values", "20", "--pairs", "2", "--output", table, "--plot", plot});
  REQUIRE(stab.code == 0);
  const auto text = testing::read_text(table);
  CHECK(text.find("# seed=1\n") != std::string::npos);
  CHECK(text.find("m,mean_avg_diff\n20,") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  CHECK(testing::read_text(plot).find("x y\n20 ") != std::string::npos);

  const auto timing = (dir / "t.csv").string();
  auto bench = invoke({"bench", "--sweep", "scaling", "--axis", "m", "--points", "2,4,8", "--n",
                       "150", "--reps", "1", "--output", timing});
  CHECK(bench.code == 0);
  CHECK(testing::read_text(timing).find("m,median_seconds\n2,") != std::string::npos);
  auto speed = invoke({"bench", "--sweep", "speedup", "--worker-counts", "1,2", "--n", "150",
                       "--reps", "1"});
  CHECK(speed.code == 0);
  CHECK(speed.out.find("weights identical across worker counts: yes") != std::string::npos);
}
