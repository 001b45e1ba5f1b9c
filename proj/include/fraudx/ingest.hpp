#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "fraudx/matrix.hpp"

namespace fraudx {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Schema configuration: which role each CSV column plays.

enum class ColumnRole { Numeric, Categorical, Label, Ignore };

struct ColumnDeclaration {
  std::string name;
  ColumnRole role;
};

// Ordered column declarations, usually parsed from a `name = role` text file.
struct SchemaConfig {
  std::vector<ColumnDeclaration> columns;

  // Parses the plain-text format:
  //   # comment
  //   TransactionAmt = numeric
  //   ProductCD      = categorical
  //   isFraud        = label
  //   TransactionID  = ignore
  static SchemaConfig parse(const std::string& text);
  static SchemaConfig load(const std::filesystem::path& path);

  std::optional<std::string> label_column() const;
  // Numeric and categorical columns, in declaration order.
  std::vector<ColumnDeclaration> feature_columns() const;
};

// ---------------------------------------------------------------------------
// Raw records.

struct Missing {
  friend bool operator==(Missing, Missing) = default;
};

// A CSV cell: missing (empty string), a parsed number, or text. Numeric
// columns hold text only when the cell could not be parsed; encode() treats
// those as missing.
using Cell = std::variant<Missing, double, std::string>;

struct RawRecord {
  std::vector<std::pair<std::string, Cell>> values;
  std::optional<int> label;
  std::string id;
};

// Reads a UTF-8, comma-delimited CSV with a header row. The header must carry
// exactly the columns named in `config` (order free). Throws IngestError on a
// missing file, header mismatch or a row of the wrong arity.
std::vector<RawRecord> load_csv(const std::filesystem::path& path, const SchemaConfig& config);

// ---------------------------------------------------------------------------
// Schema and datasets.

enum class ColumnKind { Numeric, Categorical };

struct NumericStats {
  double mean = 0.0;
  double std = 1.0;
};

// Code 0 is reserved for missing/unseen. Remaining codes follow descending
// training frequency, ties broken by category text.
struct CategoryMap {
  std::vector<std::string> categories;  // categories[code]; categories[0] is ""
  std::vector<double> frequency;        // training frequency per code
  std::unordered_map<std::string, int> codes;

  int code_of(const std::string& category) const {
    const auto it = codes.find(category);
    return it == codes.end() ? 0 : it->second;
  }
  std::size_t size() const { return categories.size(); }
};

struct SchemaColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  NumericStats stats;       // numeric columns
  CategoryMap categories;   // categorical columns
};

struct Schema {
  std::vector<SchemaColumn> columns;

  std::size_t size() const { return columns.size(); }
  bool is_categorical(std::size_t j) const {
    return columns[j].kind == ColumnKind::Categorical;
  }
  std::vector<std::string> feature_names() const;
  std::optional<std::size_t> index_of(const std::string& name) const;
};

// Encoded numeric data. Immutable after construction by convention; the
// schema is shared between a dataset and the splits derived from it.
struct Dataset {
  Matrix matrix;
  std::optional<std::vector<int>> labels;
  std::shared_ptr<const Schema> schema;
  std::vector<std::string> row_ids;

  std::size_t n_rows() const { return matrix.rows(); }
  std::size_t n_features() const { return matrix.cols(); }
  bool has_labels() const { return labels.has_value(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  // Keeps only the first `n` feature columns (schema trimmed accordingly).
  Dataset leading_features(std::size_t n) const;
  std::optional<std::size_t> find_row(const std::string& id) const;
};

// Fits category maps and numeric statistics on training records.
std::shared_ptr<const Schema> fit_schema(const std::vector<RawRecord>& records,
                                         const std::vector<ColumnDeclaration>& declarations);

// Numeric cells are z-scored (missing -> 0, the training mean); categorical
// cells become codes (unseen -> 0).
Dataset encode(const std::vector<RawRecord>& records, std::shared_ptr<const Schema> schema);

// Inverse of the categorical encoding for one column.
std::string decode_category(const Schema& schema, std::size_t column, int code);

// Index partition shared by split() and the CSV pipeline (which has to split
// records before fitting the schema). Both parts are returned sorted.
struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Partition stratified_partition(const std::vector<int>& labels, double holdout_fraction,
                               std::uint64_t seed);

std::pair<Dataset, Dataset> split(const Dataset& dataset, double holdout_fraction,
                                  std::uint64_t seed);

// load_csv, stratified partition of the records, schema fitted on the
// training records only, then both parts encoded with it.
std::pair<Dataset, Dataset> load_split(const std::filesystem::path& path, const SchemaConfig& config,
                                       double holdout_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic data with known ground truth.

// Weights with magnitude at or above this floor are large enough that a
// logistic regression on 10k rows recovers their sign.
inline constexpr double kDetectabilityFloor = 0.25;

struct SyntheticSpec {
  std::size_t n_rows = 10000;
  std::size_t n_numeric = 14;
  std::size_t n_categorical = 6;
  double fraud_rate = 0.035;
  std::uint64_t seed = 0;
  std::size_t n_informative = 5;
  std::size_t categories_per_column = 6;
  // Optional feature names, numeric columns first. Empty -> "num_i"/"cat_i".
  std::vector<std::string> feature_names;
};

struct GenerativeWeight {
  std::size_t feature;
  std::string name;
  double weight;  // logit units per encoded unit
};

struct SyntheticData {
  Dataset dataset;
  std::vector<GenerativeWeight> weights;  // exactly the nonzero weights
  double intercept = 0.0;
};

// Features are drawn in encoded space (numeric ~ N(0,1), categorical codes
// from a Zipf-like law) and labels from Bernoulli(sigmoid(b + sum w_j x_j))
// over a sparse random subset of features, with b chosen so the expected
// fraud rate matches `fraud_rate`.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// 24-column layout used for the reproduction dataset: 8 numeric columns
// followed by 16 categorical ones.
struct FeatureLayout {
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;
};
FeatureLayout transaction_feature_layout();

}  // namespace fraudx
