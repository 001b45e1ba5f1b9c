#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "fraudx/ingest.hpp"
#include "fraudx/models.hpp"
#include "fraudx/models/classifiers.hpp"
#include "gtest/gtest.h"

namespace fraudx {
namespace {

const std::filesystem::path kData = FRAUDX_TEST_DATA_DIR;

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("fraudx_ingest_" + name);
  std::ofstream(path) << text;
  return path;
}

std::vector<RawRecord> fixture_records() {
  return load_csv(kData / "fixture.csv", SchemaConfig::load(kData / "fixture.schema"));
}

const Cell& cell(const RawRecord& r, const std::string& name) {
  for (const auto& [n, c] : r.values) {
    if (n == name) return c;
  }
  throw std::runtime_error("no column " + name);
}

TEST(SchemaConfig, ParsesRolesAndComments) {
  const auto config = SchemaConfig::parse("# c\na = numeric\n\nb=categorical\ny = label\nid = ignore\n");
  ASSERT_EQ(config.columns.size(), 4u);
  EXPECT_EQ(config.label_column(), "y");
  const auto features = config.feature_columns();
  ASSERT_EQ(features.size(), 2u);
  EXPECT_EQ(features[0].name, "a");
  EXPECT_EQ(features[1].role, ColumnRole::Categorical);
}

TEST(SchemaConfig, RejectsBadInput) {
  EXPECT_THROW(SchemaConfig::parse("a = number\n"), IngestError);
  EXPECT_THROW(SchemaConfig::parse("a = numeric\na = numeric\n"), IngestError);
  EXPECT_THROW(SchemaConfig::parse("a = label\nb = label\n"), IngestError);
}

TEST(LoadCsv, ParsesMixedRow) {
  const auto path = write_temp("basic.csv", "TransactionAmt,ProductCD,isFraud\n49.0,W,0\n");
  const auto config =
      SchemaConfig::parse("TransactionAmt = numeric\nProductCD = categorical\nisFraud = label\n");
  const auto records = load_csv(path, config);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(std::get<double>(cell(records[0], "TransactionAmt")), 49.0);
  EXPECT_EQ(std::get<std::string>(cell(records[0], "ProductCD")), "W");
  EXPECT_EQ(records[0].label, 0);
}

TEST(LoadCsv, EmptyCellIsMissing) {
  const auto records = fixture_records();
  ASSERT_EQ(records.size(), 10u);
  EXPECT_TRUE(std::holds_alternative<Missing>(cell(records[5], "ProductCD")));
  EXPECT_TRUE(std::holds_alternative<Missing>(cell(records[2], "TransactionAmt")));
  // Unparseable numeric cells are kept as text and encoded as missing later.
  EXPECT_TRUE(std::holds_alternative<std::string>(cell(records[4], "TransactionAmt")));
}

TEST(LoadCsv, ReportsErrors) {
  const auto config = SchemaConfig::parse("a = numeric\nb = categorical\n");
  EXPECT_THROW(load_csv("/nonexistent/file.csv", config), IngestError);

  const auto mismatch = write_temp("mismatch.csv", "a,c\n1,x\n");
  try {
    load_csv(mismatch, config);
    FAIL() << "expected a header mismatch";
  } catch (const IngestError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find('b'), std::string::npos) << what;
    EXPECT_NE(what.find('c'), std::string::npos) << what;
  }

  const auto arity = write_temp("arity.csv", "a,b\n1,x\n2\n");
  try {
    load_csv(arity, config);
    FAIL() << "expected an arity error";
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
  }

  const auto label = write_temp("label.csv", "a,y\n1,2\n");
  EXPECT_THROW(load_csv(label, SchemaConfig::parse("a = numeric\ny = label\n")), IngestError);
}

TEST(LoadCsv, TwentyFourColumnLayout) {
  const auto layout = transaction_feature_layout();
  ASSERT_EQ(layout.numeric.size() + layout.categorical.size(), 24u);
  std::string header, row, config;
  for (const auto& n : layout.numeric) {
    header += n + ",";
    row += "1.5,";
    config += n + " = numeric\n";
  }
  for (const auto& n : layout.categorical) {
    header += n + ",";
    row += "x,";
    config += n + " = categorical\n";
  }
  header += "isFraud\n";
  row += "1\n";
  config += "isFraud = label\n";
  const auto records = load_csv(write_temp("24.csv", header + row), SchemaConfig::parse(config));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].values.size(), 24u);
  EXPECT_EQ(records[0].label, 1);
}

TEST(FitSchema, CategoryCodesFollowFrequency) {
  const auto records = fixture_records();
  const auto config = SchemaConfig::load(kData / "fixture.schema");
  const auto schema = fit_schema(records, config.feature_columns());
  const auto j = *schema->index_of("ProductCD");
  const auto& map = schema->columns[j].categories;
  // W x5, C x2, R x2 (tie broken by text), one missing.
  ASSERT_EQ(map.size(), 4u);
  EXPECT_EQ(map.code_of("W"), 1);
  EXPECT_EQ(map.code_of("C"), 2);
  EXPECT_EQ(map.code_of("R"), 3);
  EXPECT_EQ(map.code_of("unknown"), 0);
  EXPECT_DOUBLE_EQ(map.frequency[0], 0.1);

  const auto& card4 = schema->columns[*schema->index_of("card4")].categories;
  EXPECT_EQ(card4.code_of("visa"), 1);
  EXPECT_DOUBLE_EQ(card4.frequency[1], 0.7);
  EXPECT_DOUBLE_EQ(card4.frequency[2], 0.3);
}

TEST(FitSchema, NumericStatsAndDegenerateColumns) {
  const auto records = fixture_records();
  const auto schema =
      fit_schema(records, SchemaConfig::load(kData / "fixture.schema").feature_columns());
  const auto& stats = schema->columns[*schema->index_of("TransactionAmt")].stats;
  // Eight parsed values summing to 400; squared deviations sum to 5826.5.
  EXPECT_DOUBLE_EQ(stats.mean, 50.0);
  EXPECT_NEAR(stats.std, std::sqrt(5826.5 / 8.0), 1e-12);

  std::vector<RawRecord> constant(3);
  for (auto& r : constant) r.values = {{"c", Cell{7.0}}};
  const auto s2 = fit_schema(constant, {{"c", ColumnRole::Numeric}});
  EXPECT_EQ(s2->columns[0].stats.mean, 7.0);
  EXPECT_EQ(s2->columns[0].stats.std, 1.0);
}

TEST(FitSchema, RejectsMisdeclaredNumericColumn) {
  std::vector<RawRecord> records(3);
  records[0].values = {{"c", Cell{std::string("a")}}};
  records[1].values = {{"c", Cell{std::string("b")}}};
  records[2].values = {{"c", Cell{1.0}}};
  EXPECT_THROW(fit_schema(records, {{"c", ColumnRole::Numeric}}), IngestError);
}

TEST(Encode, MatchesHandEncoding) {
  const auto records = fixture_records();
  const auto schema =
      fit_schema(records, SchemaConfig::load(kData / "fixture.schema").feature_columns());
  const auto data = encode(records, schema);
  const double sd = std::sqrt(5826.5 / 8.0);
  // Columns: TransactionAmt, ProductCD (W1 C2 R3), card4 (visa1 mastercard2).
  const std::vector<std::vector<double>> expected = {
      {(49.0 - 50.0) / sd, 1, 1}, {(100.0 - 50.0) / sd, 2, 1}, {0.0, 1, 2},
      {(25.5 - 50.0) / sd, 3, 1}, {0.0, 1, 1},
  };
  for (std::size_t i = 0; i < expected.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(data.matrix(i, j), expected[i][j]) << "row " << i << " col " << j;
    }
  }
  ASSERT_TRUE(data.labels);
  EXPECT_EQ((*data.labels)[2], 1);
  EXPECT_EQ(data.row_ids[0], "row-1");
}

TEST(Encode, MeanValueEncodesToZeroAndUnseenToZero) {
  const auto records = fixture_records();
  const auto schema =
      fit_schema(records, SchemaConfig::load(kData / "fixture.schema").feature_columns());
  RawRecord r;
  r.values = {{"TransactionAmt", Cell{50.0}},
              {"ProductCD", Cell{std::string("W")}},
              {"card4", Cell{std::string("discover")}}};
  const auto data = encode({r}, schema);
  EXPECT_EQ(data.matrix(0, 0), 0.0);
  EXPECT_EQ(data.matrix(0, 2), 0.0);
  EXPECT_FALSE(data.labels);
}

TEST(Encode, DecodeRoundTrip) {
  const auto records = fixture_records();
  const auto schema =
      fit_schema(records, SchemaConfig::load(kData / "fixture.schema").feature_columns());
  for (std::size_t j = 0; j < schema->size(); ++j) {
    if (!schema->is_categorical(j)) continue;
    for (std::size_t code = 1; code < schema->columns[j].categories.size(); ++code) {
      const auto text = decode_category(*schema, j, static_cast<int>(code));
      EXPECT_EQ(schema->columns[j].categories.code_of(text), static_cast<int>(code));
    }
  }
}

TEST(Split, PartitionIsStratifiedAndDeterministic) {
  SyntheticSpec spec;
  spec.n_rows = 1000;
  spec.fraud_rate = 0.0349;
  spec.seed = 3;
  const auto data = generate_synthetic(spec).dataset;
  const auto [train, validation] = split(data, 0.2, 11);
  EXPECT_EQ(train.n_rows(), 800u);
  EXPECT_EQ(validation.n_rows(), 200u);

  std::set<std::string> ids(train.row_ids.begin(), train.row_ids.end());
  for (const auto& id : validation.row_ids) EXPECT_TRUE(ids.insert(id).second) << id;
  EXPECT_EQ(ids.size(), data.n_rows());

  auto rate = [](const Dataset& d) {
    return std::accumulate(d.labels->begin(), d.labels->end(), 0.0) / static_cast<double>(d.n_rows());
  };
  EXPECT_NEAR(rate(validation), rate(data), 0.005);
  EXPECT_NEAR(rate(train), rate(data), 0.005);

  const auto again = split(data, 0.2, 11);
  EXPECT_EQ(again.second.row_ids, validation.row_ids);
}

TEST(Split, ValidationFraudRateAtReferenceBaseRate) {
  SyntheticSpec spec;
  spec.n_rows = 10000;
  spec.fraud_rate = 0.0349;
  spec.seed = 5;
  const auto data = generate_synthetic(spec).dataset;
  const auto validation = split(data, 0.2, 1).second;
  const double overall =
      std::accumulate(data.labels->begin(), data.labels->end(), 0.0) / 10000.0;
  const double rate =
      std::accumulate(validation.labels->begin(), validation.labels->end(), 0.0) / 2000.0;
  EXPECT_NEAR(rate, overall, 0.005);
}

TEST(Split, RejectsTinyClass) {
  Dataset data;
  data.matrix = Matrix(5, 1);
  data.labels = std::vector<int>{0, 0, 0, 0, 1};
  data.row_ids = {"a", "b", "c", "d", "e"};
  EXPECT_THROW(split(data, 0.2, 1), std::exception);
}

TEST(Split, SchemaStatsIgnoreValidationRows) {
  // Schema comes from training records only; perturbing a held-out record
  // must not change it.
  auto records = fixture_records();
  const auto config = SchemaConfig::load(kData / "fixture.schema");
  std::vector<RawRecord> train(records.begin(), records.begin() + 8);
  const auto before = fit_schema(train, config.feature_columns());
  records[9].values[1].second = Cell{1e6};
  std::vector<RawRecord> train_again(records.begin(), records.begin() + 8);
  const auto after = fit_schema(train_again, config.feature_columns());
  EXPECT_EQ(before->columns[0].stats.mean, after->columns[0].stats.mean);
  EXPECT_EQ(before->columns[0].stats.std, after->columns[0].stats.std);
}

TEST(Synthetic, FraudRateAndWeights) {
  SyntheticSpec spec;
  spec.seed = 21;
  const auto synth = generate_synthetic(spec);
  const auto& labels = *synth.dataset.labels;
  const double rate = std::accumulate(labels.begin(), labels.end(), 0.0) / 10000.0;
  EXPECT_NEAR(rate, 0.035, 0.01);
  EXPECT_EQ(synth.weights.size(), spec.n_informative);
  for (const auto& w : synth.weights) EXPECT_NE(w.weight, 0.0);
  EXPECT_EQ(synth.dataset.n_features(), spec.n_numeric + spec.n_categorical);
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticSpec spec;
  spec.n_rows = 2000;
  spec.seed = 4;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_EQ(a.dataset.matrix, b.dataset.matrix);
  EXPECT_EQ(*a.dataset.labels, *b.dataset.labels);
}

TEST(Synthetic, RejectsBadParameters) {
  SyntheticSpec spec;
  spec.fraud_rate = 0.6;
  EXPECT_THROW(generate_synthetic(spec), IngestError);
  spec.fraud_rate = 0.035;
  spec.n_rows = 100;  // 3.5 expected fraud rows
  EXPECT_THROW(generate_synthetic(spec), IngestError);
}

TEST(Synthetic, LogisticRegressionRecoversSigns) {
  SyntheticSpec spec;
  spec.seed = 8;
  const auto synth = generate_synthetic(spec);
  const auto sf = train(ModelSpec::defaults(ModelKind::LogisticRegression, 1), synth.dataset);
  const auto& lr = dynamic_cast<const LogisticRegressionModel&>(sf.model());
  for (const auto& w : synth.weights) {
    if (std::abs(w.weight) < kDetectabilityFloor) continue;
    EXPECT_EQ(std::signbit(lr.coefficients()[w.feature]), std::signbit(w.weight)) << w.name;
  }
}

}  // namespace
}  // namespace fraudx
