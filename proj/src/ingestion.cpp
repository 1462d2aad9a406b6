#include "direlieff/ingestion.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

namespace direlieff::io {

namespace {

using core::FeatureKind;
using core::FeatureMeta;
using core::Instance;
using core::Schema;
using nlohmann::json;

constexpr std::array<std::string_view, 7> kMissingTokens = {"", "?", "NA", "N/A",
                                                            "nan", "NaN", "NAN"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_missing(std::string_view cell) {
  return std::find(kMissingTokens.begin(), kMissingTokens.end(), cell) != kMissingTokens.end();
}

std::optional<double> parse_real(std::string_view cell) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma
                                                                             : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::string slurp(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

/// Header plus kinds for a csv, from a sidecar or by inference.
struct CsvLayout {
  std::vector<std::string> header;
  std::size_t class_column = 0;
  Schema schema;
  bool closed_labels = false;
};

std::vector<std::string> read_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    std::vector<std::string> header;
    for (auto cell : split_csv(line)) header.emplace_back(cell);
    if (header.size() < 2) {
      throw ParseError("'" + path.string() + "' has a single column; need features and a class",
                       1);
    }
    return header;
  }
  throw ParseError("'" + path.string() + "' is empty", 0);
}

CsvLayout layout_from_sidecar(const std::vector<std::string>& header, const Sidecar& sidecar) {
  if (sidecar.columns.size() != header.size()) {
    throw InvalidArgument("sidecar lists " + std::to_string(sidecar.columns.size()) +
                          " columns but the csv header has " + std::to_string(header.size()));
  }
  CsvLayout layout;
  layout.header = header;
  layout.class_column = header.size() - 1;
  if (sidecar.class_column) {
    auto it = std::find(header.begin(), header.end(), *sidecar.class_column);
    if (it == header.end()) {
      throw InvalidArgument("sidecar class column '" + *sidecar.class_column +
                            "' is not in the csv header");
    }
    layout.class_column = static_cast<std::size_t>(std::distance(header.begin(), it));
  }
  std::vector<FeatureMeta> features;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (sidecar.columns[c].name != header[c]) {
      throw InvalidArgument("sidecar column " + std::to_string(c) + " is '" +
                            sidecar.columns[c].name + "' but the csv header says '" + header[c] +
                            "'");
    }
    if (c == layout.class_column) continue;
    FeatureMeta meta;
    meta.name = header[c];
    meta.kind = sidecar.columns[c].kind;
    meta.index = features.size();
    features.push_back(std::move(meta));
  }
  layout.schema = Schema(std::move(features), sidecar.class_labels);
  layout.closed_labels = !sidecar.class_labels.empty();
  return layout;
}

Schema infer_from_stream(std::istream& in, const std::vector<std::string>& header,
                         const std::filesystem::path& path) {
  const std::size_t columns = header.size();
  std::vector<bool> numeric(columns, true);
  std::size_t rows = 0;
  std::size_t line_no = 1;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    for (std::size_t c = 0; c < columns; ++c) {
      if (numeric[c] && !parse_real(cells[c])) numeric[c] = false;
    }
    ++rows;
  }
  if (rows == 0) {
    throw ParseError("'" + path.string() + "' has a header but no data rows", 0);
  }
  std::vector<FeatureMeta> features;
  for (std::size_t c = 0; c + 1 < columns; ++c) {
    FeatureMeta meta;
    meta.name = header[c];
    meta.kind = numeric[c] ? FeatureKind::numeric : FeatureKind::nominal;
    meta.index = c;
    features.push_back(std::move(meta));
  }
  return Schema(std::move(features), {});
}

std::uint32_t class_id(Schema& schema, std::vector<std::string>& labels, bool closed,
                       std::string_view cell, std::size_t line_no) {
  const std::string text(cell);
  const auto idx = schema.find_class(text);
  if (idx >= 0) return static_cast<std::uint32_t>(idx);
  if (closed) throw ParseError("unknown class label '" + text + "'", line_no);
  labels.push_back(text);
  schema = Schema(schema.features(), labels);
  return static_cast<std::uint32_t>(labels.size() - 1);
}

Dataset read_csv(const DatasetSource& src) {
  CsvLayout layout;
  {
    auto in = open_input(src.path);
    auto header = read_header(in, src.path);
    if (src.schema_sidecar) {
      layout = layout_from_sidecar(header, read_sidecar(*src.schema_sidecar));
    } else {
      layout.header = header;
      layout.class_column = header.size() - 1;
      layout.schema = infer_from_stream(in, header, src.path);
    }
  }

  auto in = open_input(src.path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_blank(line)) break;
  }

  Dataset out;
  Schema schema = layout.schema;
  auto features = schema.features();
  std::vector<std::string> labels = schema.class_labels();
  const std::size_t columns = layout.header.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    Instance inst;
    inst.id = out.instances.size();
    inst.values.reserve(features.size());
    std::size_t f = 0;
    for (std::size_t c = 0; c < columns; ++c) {
      if (is_missing(cells[c])) {
        throw ParseError("missing value in column '" + layout.header[c] +
                             "' (missing values are not supported)",
                         line_no);
      }
      if (c == layout.class_column) {
        inst.label = class_id(schema, labels, layout.closed_labels, cells[c], line_no);
        continue;
      }
      auto& meta = features[f];
      if (meta.kind == FeatureKind::numeric) {
        auto value = parse_real(cells[c]);
        if (!value) {
          throw ParseError("column '" + meta.name + "' is numeric but cell '" +
                               std::string(cells[c]) + "' is not a finite number",
                           line_no);
        }
        inst.values.push_back(*value);
      } else {
        inst.values.push_back(static_cast<double>(meta.intern(std::string(cells[c]))));
      }
      ++f;
    }
    out.instances.push_back(std::move(inst));
  }
  if (out.instances.empty()) {
    throw ParseError("'" + src.path.string() + "' has a header but no data rows", 0);
  }
  out.schema = Schema(std::move(features), std::move(labels));
  out.schema.validate();
  return out;
}

Dataset read_libsvm(const DatasetSource& src) {
  std::optional<Sidecar> sidecar;
  if (src.schema_sidecar) sidecar = read_sidecar(*src.schema_sidecar);

  struct Row {
    std::string label;
    std::vector<std::pair<std::size_t, std::string>> entries;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  auto in = open_input(src.path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    Row row;
    row.line_no = line_no;
    std::istringstream tokens{std::string(view)};
    std::string token;
    tokens >> row.label;
    if (is_missing(row.label)) throw ParseError("missing class label", line_no);
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError("expected <index>:<value>, found '" + token + "'", line_no);
      }
      std::size_t index = 0;
      const std::string_view idx_text(token.data(), colon);
      auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || index == 0) {
        throw ParseError("bad feature index in '" + token + "' (indices are 1-based)", line_no);
      }
      const std::string value = token.substr(colon + 1);
      if (is_missing(value)) {
        throw ParseError("missing value for feature " + std::string(idx_text), line_no);
      }
      max_index = std::max(max_index, index);
      row.entries.emplace_back(index, value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("'" + src.path.string() + "' has no data rows", 0);

  std::size_t a = max_index;
  if (sidecar) {
    a = sidecar->columns.size();
  } else if (src.num_features) {
    a = *src.num_features;
  }
  if (max_index > a) {
    throw ParseError("feature index " + std::to_string(max_index) + " exceeds feature count " +
                         std::to_string(a),
                     0);
  }

  std::vector<FeatureMeta> features(a);
  for (std::size_t f = 0; f < a; ++f) {
    features[f].index = f;
    if (sidecar) {
      features[f].name = sidecar->columns[f].name;
      features[f].kind = sidecar->columns[f].kind;
    } else {
      features[f].name = "f" + std::to_string(f + 1);
    }
  }
  std::vector<std::string> labels = sidecar ? sidecar->class_labels : std::vector<std::string>{};
  const bool closed = !labels.empty();
  Schema schema(features, labels);

  Dataset out;
  out.instances.reserve(rows.size());
  for (const auto& row : rows) {
    Instance inst;
    inst.id = out.instances.size();
    inst.label = class_id(schema, labels, closed, row.label, row.line_no);
    std::vector<std::optional<std::string>> cells(a);
    for (const auto& [index, text] : row.entries) cells[index - 1] = text;
    inst.values.resize(a, 0.0);
    for (std::size_t f = 0; f < a; ++f) {
      if (features[f].kind == FeatureKind::numeric) {
        if (!cells[f]) continue;
        auto value = parse_real(*cells[f]);
        if (!value) {
          throw ParseError("feature " + std::to_string(f + 1) + " value '" + *cells[f] +
                               "' is not a finite number",
                           row.line_no);
        }
        inst.values[f] = *value;
      } else {
        inst.values[f] = static_cast<double>(features[f].intern(cells[f].value_or("0")));
      }
    }
    out.instances.push_back(std::move(inst));
  }
  out.schema = Schema(std::move(features), std::move(labels));
  out.schema.validate();
  return out;
}

json schema_json(const Schema& schema) {
  json features = json::array();
  for (const auto& f : schema.features()) {
    features.push_back(
        {{"name", f.name}, {"kind", core::to_string(f.kind)}, {"categories", f.categories}});
  }
  return {{"features", features}, {"class_labels", schema.class_labels()}};
}

}  // namespace

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::csv;
  if (text == "libsvm") return Format::libsvm;
  throw InvalidArgument("unknown format '" + text + "' (expected csv|libsvm)");
}

Sidecar parse_sidecar(const std::string& json_text) {
  Sidecar out;
  try {
    const auto doc = json::parse(json_text);
    for (const auto& col : doc.at("columns")) {
      Sidecar::Column column;
      column.name = col.at("name").get<std::string>();
      column.kind = core::parse_feature_kind(col.value("kind", std::string("numeric")));
      out.columns.push_back(std::move(column));
    }
    if (doc.contains("class")) out.class_column = doc.at("class").get<std::string>();
    if (doc.contains("class_labels")) {
      out.class_labels = doc.at("class_labels").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid schema sidecar: ") + e.what(), 0);
  }
  return out;
}

Sidecar read_sidecar(const std::filesystem::path& path) { return parse_sidecar(slurp(path)); }

std::string sidecar_json(const Sidecar& sidecar) {
  json columns = json::array();
  for (const auto& c : sidecar.columns) {
    columns.push_back({{"name", c.name}, {"kind", core::to_string(c.kind)}});
  }
  json doc = {{"columns", columns}};
  if (sidecar.class_column) doc["class"] = *sidecar.class_column;
  if (!sidecar.class_labels.empty()) doc["class_labels"] = sidecar.class_labels;
  return doc.dump(2) + "\n";
}

std::string schema_to_json(const Schema& schema) { return schema_json(schema).dump(); }

Schema schema_from_json(const std::string& json_text) {
  try {
    const auto doc = json::parse(json_text);
    std::vector<FeatureMeta> features;
    for (const auto& f : doc.at("features")) {
      FeatureMeta meta;
      meta.name = f.at("name").get<std::string>();
      meta.kind = core::parse_feature_kind(f.at("kind").get<std::string>());
      meta.categories = f.value("categories", std::vector<std::string>{});
      meta.index = features.size();
      features.push_back(std::move(meta));
    }
    return Schema(std::move(features), doc.at("class_labels").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid schema document: ") + e.what(), 0);
  }
}

Schema infer_schema(const DatasetSource& src) {
  if (src.format != Format::csv) {
    throw InvalidArgument("schema inference needs a csv file with a header row");
  }
  auto in = open_input(src.path);
  const auto header = read_header(in, src.path);
  return infer_from_stream(in, header, src.path);
}

Dataset read_dataset(const DatasetSource& src) {
  return src.format == Format::csv ? read_csv(src) : read_libsvm(src);
}

engine::PartitionedDataset<Instance> partition(Dataset dataset, std::size_t partitions) {
  if (partitions < 1) throw InvalidArgument("partition count must be >= 1");
  const std::size_t n = dataset.instances.size();
  const std::size_t base = n / partitions;
  const std::size_t extra = n % partitions;
  std::vector<std::vector<Instance>> blocks(partitions);
  auto it = std::make_move_iterator(dataset.instances.begin());
  for (std::size_t p = 0; p < partitions; ++p) {
    const std::size_t size = base + (p < extra ? 1 : 0);
    blocks[p].assign(it, it + static_cast<std::ptrdiff_t>(size));
    it += static_cast<std::ptrdiff_t>(size);
  }
  return engine::PartitionedDataset<Instance>(std::move(blocks))
      .with_schema(std::move(dataset.schema));
}

engine::PartitionedDataset<Instance> load(const DatasetSource& src, std::size_t partitions) {
  if (partitions < 1) throw InvalidArgument("partition count must be >= 1");
  return partition(read_dataset(src), partitions);
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void write_csv(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path,
               const Dataset& dataset) {
  const auto& schema = dataset.schema;
  std::string class_name = "class";
  while (std::any_of(schema.features().begin(), schema.features().end(),
                     [&](const FeatureMeta& f) { return f.name == class_name; })) {
    class_name += "_";
  }

  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error("cannot open '" + csv_path.string() + "' for writing");
  for (const auto& f : schema.features()) out << f.name << ',';
  out << class_name << '\n';
  std::string row;
  for (const auto& inst : dataset.instances) {
    row.clear();
    for (std::size_t a = 0; a < inst.values.size(); ++a) {
      const auto& meta = schema.feature(a);
      if (meta.kind == FeatureKind::numeric) {
        row += format_double(inst.values[a]);
      } else {
        row += meta.categories.at(static_cast<std::size_t>(inst.values[a]));
      }
      row += ',';
    }
    row += schema.class_labels().at(inst.label);
    row += '\n';
    out << row;
  }
  if (!out) throw Error("failed writing '" + csv_path.string() + "'");

  Sidecar sidecar;
  for (const auto& f : schema.features()) sidecar.columns.push_back({f.name, f.kind});
  sidecar.columns.push_back({class_name, FeatureKind::nominal});
  sidecar.class_column = class_name;
  sidecar.class_labels = schema.class_labels();
  std::ofstream side(sidecar_path, std::ios::binary);
  if (!side) throw Error("cannot open '" + sidecar_path.string() + "' for writing");
  side << sidecar_json(sidecar);
}

}  // namespace direlieff::io
