#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "direlieff/core.hpp"
#include "direlieff/engine.hpp"

namespace direlieff::io {

enum class Format { csv, libsvm };

Format parse_format(const std::string& text);

struct DatasetSource {
  std::filesystem::path path;
  Format format = Format::csv;
  std::optional<std::filesystem::path> schema_sidecar;
  /// LibSVM only: feature count when neither a sidecar nor the data fixes it.
  std::optional<std::size_t> num_features;
};

/// Flat, fully loaded dataset.
struct Dataset {
  core::Schema schema;
  std::vector<core::Instance> instances;
};

/// Sidecar document: per-column {name, kind}, the class column name and an
/// optional closed list of class labels.
///
///   {"columns": [{"name": "x", "kind": "numeric"}, ...],
///    "class": "label", "class_labels": ["no", "yes"]}
struct Sidecar {
  struct Column {
    std::string name;
    core::FeatureKind kind = core::FeatureKind::numeric;
  };
  std::vector<Column> columns;
  std::optional<std::string> class_column;
  std::vector<std::string> class_labels;
};

Sidecar read_sidecar(const std::filesystem::path& path);
Sidecar parse_sidecar(const std::string& json_text);
std::string sidecar_json(const Sidecar& sidecar);

/// Full schema (including nominal category dictionaries) to JSON and back.
std::string schema_to_json(const core::Schema& schema);
core::Schema schema_from_json(const std::string& json_text);

/// Infers a schema from a headed csv: a column is numeric iff every data cell
/// parses as a finite real; the last column is the class. Category and class
/// dictionaries are left empty for load to fill.
core::Schema infer_schema(const DatasetSource& src);

/// Reads every row into one Instance with sequential ids.
Dataset read_dataset(const DatasetSource& src);

/// Splits rows contiguously into `partitions` near-equal blocks; the first
/// n % partitions blocks hold one extra row.
engine::PartitionedDataset<core::Instance> partition(Dataset dataset, std::size_t partitions);

engine::PartitionedDataset<core::Instance> load(const DatasetSource& src, std::size_t partitions);

/// Writes `dataset` as a headed csv (class column last) plus a sidecar that
/// reproduces its schema exactly.
void write_csv(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path,
               const Dataset& dataset);

/// Shortest round-trip decimal text of a double.
std::string format_double(double value);

}  // namespace direlieff::io
