#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "fraudx/ingest.hpp"

namespace fraudx {
namespace {

std::string cell_text(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* d = std::get_if<double>(&cell)) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, ptr);
  }
  return {};
}

// Position of each declared column inside a record; records built by
// load_csv share one layout, but hand-built records may not.
std::vector<std::size_t> locate_columns(const RawRecord& record,
                                        const std::vector<std::string>& names) {
  std::vector<std::size_t> positions(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j < record.values.size() && record.values[j].first == names[j]) {
      positions[j] = j;
      continue;
    }
    const auto it = std::find_if(record.values.begin(), record.values.end(),
                                 [&](const auto& kv) { return kv.first == names[j]; });
    if (it == record.values.end()) {
      throw IngestError("record '" + record.id + "' has no column '" + names[j] + "'");
    }
    positions[j] = static_cast<std::size_t>(it - record.values.begin());
  }
  return positions;
}

}  // namespace

std::vector<std::string> Schema::feature_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> Schema::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].name == name) return j;
  }
  return std::nullopt;
}

std::shared_ptr<const Schema> fit_schema(const std::vector<RawRecord>& records,
                                         const std::vector<ColumnDeclaration>& declarations) {
  if (records.empty()) throw IngestError("fit_schema: no training records");
  std::vector<std::string> names;
  for (const auto& d : declarations) {
    if (d.role != ColumnRole::Numeric && d.role != ColumnRole::Categorical) {
      throw IngestError("fit_schema: column '" + d.name + "' is not a feature column");
    }
    names.push_back(d.name);
  }

  auto schema = std::make_shared<Schema>();
  schema->columns.resize(declarations.size());
  for (std::size_t j = 0; j < declarations.size(); ++j) {
    schema->columns[j].name = declarations[j].name;
    schema->columns[j].kind = declarations[j].role == ColumnRole::Numeric ? ColumnKind::Numeric
                                                                          : ColumnKind::Categorical;
  }

  std::vector<double> sum(names.size(), 0.0), sum_sq(names.size(), 0.0);
  std::vector<std::size_t> n_numeric(names.size(), 0), n_text(names.size(), 0),
      n_missing(names.size(), 0);
  std::vector<std::map<std::string, std::size_t>> counts(names.size());

  for (const auto& record : records) {
    const auto positions = locate_columns(record, names);
    for (std::size_t j = 0; j < names.size(); ++j) {
      const Cell& cell = record.values[positions[j]].second;
      if (std::holds_alternative<Missing>(cell)) {
        ++n_missing[j];
        continue;
      }
      if (schema->columns[j].kind == ColumnKind::Numeric) {
        if (const auto* d = std::get_if<double>(&cell)) {
          sum[j] += *d;
          ++n_numeric[j];
        } else {
          ++n_text[j];
        }
      } else {
        ++counts[j][cell_text(cell)];
      }
    }
  }

  const auto n = static_cast<double>(records.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto& column = schema->columns[j];
    if (column.kind == ColumnKind::Numeric) {
      const std::size_t present = n_numeric[j] + n_text[j];
      if (present > 0 && 2 * n_text[j] > present) {
        throw IngestError("column '" + column.name + "' is declared numeric but " +
                          std::to_string(n_text[j]) + " of " + std::to_string(present) +
                          " non-empty cells are not numbers");
      }
      if (n_numeric[j] == 0) continue;  // mean 0, std 1
      const double mean = sum[j] / static_cast<double>(n_numeric[j]);
      column.stats.mean = mean;
    } else {
      std::vector<std::pair<std::string, std::size_t>> ordered(counts[j].begin(), counts[j].end());
      std::stable_sort(ordered.begin(), ordered.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      auto& map = column.categories;
      map.categories.push_back("");
      map.frequency.push_back(static_cast<double>(n_missing[j]) / n);
      for (const auto& [category, count] : ordered) {
        map.codes.emplace(category, static_cast<int>(map.categories.size()));
        map.categories.push_back(category);
        map.frequency.push_back(static_cast<double>(count) / n);
      }
    }
  }

  // Second pass for a numerically stable variance.
  for (const auto& record : records) {
    const auto positions = locate_columns(record, names);
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (schema->columns[j].kind != ColumnKind::Numeric) continue;
      if (const auto* d = std::get_if<double>(&record.values[positions[j]].second)) {
        const double delta = *d - schema->columns[j].stats.mean;
        sum_sq[j] += delta * delta;
      }
    }
  }
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto& column = schema->columns[j];
    if (column.kind != ColumnKind::Numeric || n_numeric[j] == 0) continue;
    const double sd = std::sqrt(sum_sq[j] / static_cast<double>(n_numeric[j]));
    column.stats.std = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
  }
  return schema;
}

Dataset encode(const std::vector<RawRecord>& records, std::shared_ptr<const Schema> schema) {
  const auto names = schema->feature_names();
  Dataset out;
  out.matrix = Matrix(records.size(), names.size());
  out.schema = schema;
  out.row_ids.reserve(records.size());
  bool all_labelled = !records.empty();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    const auto positions = locate_columns(record, names);
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto& column = schema->columns[j];
      const Cell& cell = record.values[positions[j]].second;
      double value = 0.0;
      if (column.kind == ColumnKind::Numeric) {
        if (const auto* d = std::get_if<double>(&cell)) {
          value = (*d - column.stats.mean) / column.stats.std;
        }
      } else if (!std::holds_alternative<Missing>(cell)) {
        value = column.categories.code_of(cell_text(cell));
      }
      out.matrix(i, j) = value;
    }
    out.row_ids.push_back(record.id.empty() ? "row-" + std::to_string(i + 1) : record.id);
    all_labelled = all_labelled && record.label.has_value();
  }
  if (all_labelled) {
    std::vector<int> labels;
    labels.reserve(records.size());
    for (const auto& r : records) labels.push_back(*r.label);
    out.labels = std::move(labels);
  }
  return out;
}

std::string decode_category(const Schema& schema, std::size_t column, int code) {
  const auto& map = schema.columns.at(column).categories;
  if (code < 0 || static_cast<std::size_t>(code) >= map.size()) {
    throw std::out_of_range("decode_category: invalid code " + std::to_string(code));
  }
  return map.categories[static_cast<std::size_t>(code)];
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.matrix = matrix.select_rows(indices);
  out.schema = schema;
  out.row_ids.reserve(indices.size());
  for (const auto i : indices) out.row_ids.push_back(row_ids.at(i));
  if (labels) {
    std::vector<int> picked;
    picked.reserve(indices.size());
    for (const auto i : indices) picked.push_back(labels->at(i));
    out.labels = std::move(picked);
  }
  return out;
}

Dataset Dataset::leading_features(std::size_t n) const {
  Dataset out = *this;
  out.matrix = matrix.leading_columns(n);
  auto trimmed = std::make_shared<Schema>(*schema);
  trimmed->columns.resize(n);
  out.schema = std::move(trimmed);
  return out;
}

std::optional<std::size_t> Dataset::find_row(const std::string& id) const {
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    if (row_ids[i] == id) return i;
  }
  return std::nullopt;
}

}  // namespace fraudx
