#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "fraudx/ingest.hpp"

namespace fraudx {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

ColumnRole parse_role(const std::string& text, std::size_t line_no) {
  if (text == "numeric") return ColumnRole::Numeric;
  if (text == "categorical") return ColumnRole::Categorical;
  if (text == "label") return ColumnRole::Label;
  if (text == "ignore") return ColumnRole::Ignore;
  throw IngestError("schema config line " + std::to_string(line_no) + ": unknown role '" +
                    text + "' (expected numeric|categorical|label|ignore)");
}

// RFC 4180 style: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

}  // namespace

SchemaConfig SchemaConfig::parse(const std::string& text) {
  SchemaConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw IngestError("schema config line " + std::to_string(line_no) + ": expected 'name = role'");
    }
    std::string name = trim(std::string_view(stripped).substr(0, eq));
    const std::string role = trim(std::string_view(stripped).substr(eq + 1));
    if (name.empty()) {
      throw IngestError("schema config line " + std::to_string(line_no) + ": empty column name");
    }
    if (!seen.insert(name).second) {
      throw IngestError("schema config line " + std::to_string(line_no) + ": duplicate column '" +
                        name + "'");
    }
    config.columns.push_back({std::move(name), parse_role(role, line_no)});
  }
  const auto labels = std::count_if(config.columns.begin(), config.columns.end(),
                                    [](const auto& c) { return c.role == ColumnRole::Label; });
  if (labels > 1) throw IngestError("schema config declares more than one label column");
  return config;
}

SchemaConfig SchemaConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open schema config: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::optional<std::string> SchemaConfig::label_column() const {
  for (const auto& c : columns) {
    if (c.role == ColumnRole::Label) return c.name;
  }
  return std::nullopt;
}

std::vector<ColumnDeclaration> SchemaConfig::feature_columns() const {
  std::vector<ColumnDeclaration> out;
  for (const auto& c : columns) {
    if (c.role == ColumnRole::Numeric || c.role == ColumnRole::Categorical) out.push_back(c);
  }
  return out;
}

std::vector<RawRecord> load_csv(const std::filesystem::path& path, const SchemaConfig& config) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw IngestError("CSV file is empty: " + path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  const std::set<std::string> header_set(header.begin(), header.end());
  std::set<std::string> declared;
  for (const auto& c : config.columns) declared.insert(c.name);
  if (header_set != declared || header_set.size() != header.size()) {
    std::string message = "CSV header does not match schema config.";
    std::string only_csv, only_config;
    for (const auto& h : header_set) {
      if (!declared.count(h)) only_csv += " " + h;
    }
    for (const auto& d : declared) {
      if (!header_set.count(d)) only_config += " " + d;
    }
    if (!only_csv.empty()) message += " Only in CSV:" + only_csv + ".";
    if (!only_config.empty()) message += " Only in config:" + only_config + ".";
    if (header_set.size() != header.size()) message += " Duplicate header names.";
    throw IngestError(message);
  }

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position[header[i]] = i;
  const auto features = config.feature_columns();
  const auto label_name = config.label_column();

  std::vector<RawRecord> records;
  std::size_t row_no = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IngestError("CSV row " + std::to_string(row_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
    }
    RawRecord record;
    record.id = "row-" + std::to_string(row_no - 1);
    record.values.reserve(features.size());
    for (const auto& column : features) {
      const std::string& raw = fields[position.at(column.name)];
      Cell cell = Missing{};
      if (!trim(raw).empty()) {
        if (column.role == ColumnRole::Numeric) {
          if (auto v = parse_number(raw)) {
            cell = *v;
          } else {
            cell = raw;
          }
        } else {
          cell = raw;
        }
      }
      record.values.emplace_back(column.name, std::move(cell));
    }
    if (label_name) {
      const std::string raw = trim(fields[position.at(*label_name)]);
      if (!raw.empty()) {
        const auto v = parse_number(raw);
        if (!v || (*v != 0.0 && *v != 1.0)) {
          throw IngestError("CSV row " + std::to_string(row_no) + ": label '" + raw +
                            "' is not 0 or 1");
        }
        record.label = static_cast<int>(*v);
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace fraudx
