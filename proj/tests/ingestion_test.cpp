#include <doctest.h>

#include "direlieff/error.hpp"
#include "direlieff/ingestion.hpp"
#include "support.hpp"

using namespace direlieff;
using core::FeatureKind;

namespace {

io::DatasetSource csv_source(const std::filesystem::path& path) {
  io::DatasetSource src;
  src.path = path;
  return src;
}

}  // namespace

TEST_CASE("contiguous partitioning gives the remainder to the first partitions") {
  testing::TempDir dir;
  testing::write_text(dir / "four.csv", "x,y\n1,a\n2,b\n3,a\n4,b\n");
  testing::write_text(dir / "five.csv", "x,y\n1,a\n2,b\n3,a\n4,b\n5,a\n");
  CHECK(io::load(csv_source(dir / "four.csv"), 2).partition_sizes() ==
        std::vector<std::size_t>{2, 2});
  auto five = io::load(csv_source(dir / "five.csv"), 2);
  CHECK(five.partition_sizes() == std::vector<std::size_t>{3, 2});
  CHECK(io::load(csv_source(dir / "five.csv"), 7).partition_sizes() ==
        std::vector<std::size_t>{1, 1, 1, 1, 1, 0, 0});

  const auto rows = five.collect();
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].id == i);
    CHECK(rows[i].values[0] == static_cast<double>(i + 1));
  }
  CHECK(rows == io::load(csv_source(dir / "five.csv"), 3).collect());
  CHECK_THROWS_AS(io::load(csv_source(dir / "five.csv"), 0), InvalidArgument);
}

TEST_CASE("libsvm rows default absent features to zero") {
  testing::TempDir dir;
  testing::write_text(dir / "d.svm", "1 1:0.5 3:2.0\n0 2:1\n");
  io::DatasetSource src;
  src.path = dir / "d.svm";
  src.format = io::Format::libsvm;
  src.num_features = 3;
  const auto ds = io::read_dataset(src);
  REQUIRE(ds.instances.size() == 2);
  CHECK(ds.schema.feature_count() == 3);
  CHECK(ds.instances[0].values == std::vector<double>{0.5, 0.0, 2.0});
  CHECK(ds.schema.class_labels()[ds.instances[0].label] == "1");
  CHECK(ds.instances[1].values == std::vector<double>{0.0, 1.0, 0.0});

  src.num_features.reset();
  CHECK(io::read_dataset(src).schema.feature_count() == 3);
  src.num_features = 2;
  CHECK_THROWS_AS(io::read_dataset(src), ParseError);
}

TEST_CASE("schema inference") {
  testing::TempDir dir;
  testing::write_text(dir / "a.csv", "p,q,label\n1.0,a,y\n2,b,n\n");
  const auto schema = io::infer_schema(csv_source(dir / "a.csv"));
  REQUIRE(schema.feature_count() == 2);
  CHECK(schema.feature(0).kind == FeatureKind::numeric);
  CHECK(schema.feature(1).kind == FeatureKind::nominal);
  const auto ds = io::read_dataset(csv_source(dir / "a.csv"));
  CHECK(ds.schema.class_labels() == std::vector<std::string>{"y", "n"});
  CHECK(ds.schema.feature(1).categories == std::vector<std::string>{"a", "b"});

  testing::write_text(dir / "mixed.csv", "p,label\n1.0,y\nx,n\n");
  CHECK(io::infer_schema(csv_source(dir / "mixed.csv")).feature(0).kind == FeatureKind::nominal);

  testing::write_text(dir / "header.csv", "p,label\n");
  CHECK_THROWS_AS(io::infer_schema(csv_source(dir / "header.csv")), ParseError);
  testing::write_text(dir / "empty.csv", "");
  CHECK_THROWS_AS(io::infer_schema(csv_source(dir / "empty.csv")), ParseError);
  testing::write_text(dir / "single.csv", "label\ny\nn\n");
  CHECK_THROWS_AS(io::infer_schema(csv_source(dir / "single.csv")), ParseError);
}

TEST_CASE("malformed rows report their line number") {
  testing::TempDir dir;
  testing::write_text(dir / "short.csv", "p,q,label\n1,2,y\n3,n\n");
  try {
    io::read_dataset(csv_source(dir / "short.csv"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  testing::write_text(dir / "missing.csv", "p,q,label\n1,2,y\n3,?,n\n");
  try {
    io::read_dataset(csv_source(dir / "missing.csv"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
}

TEST_CASE("sidecar overrides inference and closes the class set") {
  testing::TempDir dir;
  testing::write_text(dir / "d.csv", "proto,size,label\n1,10,ok\n2,20,bad\n1,30,ok\n");
  testing::write_text(dir / "d.json",
                      R"({"columns": [{"name": "proto", "kind": "nominal"},
                                      {"name": "size", "kind": "numeric"},
                                      {"name": "label", "kind": "nominal"}],
                          "class": "label", "class_labels": ["ok", "bad", "unknown"]})");
  io::DatasetSource src = csv_source(dir / "d.csv");
  src.schema_sidecar = dir / "d.json";
  const auto ds = io::read_dataset(src);
  CHECK(ds.schema.feature(0).kind == FeatureKind::nominal);
  CHECK(ds.schema.feature(0).categories == std::vector<std::string>{"1", "2"});
  CHECK(ds.schema.class_labels() == std::vector<std::string>{"ok", "bad", "unknown"});
  CHECK(ds.instances[1].label == 1);
  CHECK(ds.instances[2].values == std::vector<double>{0.0, 30.0});

  testing::write_text(dir / "e.csv", "proto,size,label\n1,10,ok\n2,20,weird\n");
  src.path = dir / "e.csv";
  try {
    io::read_dataset(src);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  testing::write_text(dir / "f.csv", "label,proto,size\nok,1,10\nbad,2,20\n");
  src.path = dir / "f.csv";
  CHECK_THROWS_AS(io::read_dataset(src), InvalidArgument);
}

TEST_CASE("written csv and sidecar reload to the same dataset") {
  testing::TempDir dir;
  std::mt19937_64 rng(3);
  testing::RandomShape shape;
  shape.n = 40;
  shape.a = 6;
  shape.classes = 3;
  auto original = testing::random_dataset(shape, rng);
  io::write_csv(dir / "r.csv", dir / "r.json", original);
  io::DatasetSource src = csv_source(dir / "r.csv");
  src.schema_sidecar = dir / "r.json";
  const auto loaded = io::read_dataset(src);
  REQUIRE(loaded.instances.size() == original.instances.size());
  CHECK(loaded.schema.class_labels() == original.schema.class_labels());
  // category ids are re-interned in order of appearance, so compare texts
  auto text = [](const io::Dataset& ds, std::size_t i, std::size_t a) {
    const auto& f = ds.schema.feature(a);
    const double v = ds.instances[i].values[a];
    return f.kind == FeatureKind::nominal ? f.categories.at(static_cast<std::size_t>(v))
                                          : io::format_double(v);
  };
  for (std::size_t i = 0; i < shape.n; ++i) {
    CHECK(loaded.instances[i].id == original.instances[i].id);
    CHECK(loaded.instances[i].label == original.instances[i].label);
    for (std::size_t a = 0; a < shape.a; ++a) {
      CHECK(loaded.schema.feature(a).kind == original.schema.feature(a).kind);
      CHECK(text(loaded, i, a) == text(original, i, a));
    }
  }

  CHECK(io::schema_from_json(io::schema_to_json(original.schema)) == original.schema);
}

TEST_CASE("shortest round-trip number text") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-2.0) == "-2");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
