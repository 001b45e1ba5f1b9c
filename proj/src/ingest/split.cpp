#include <algorithm>
#include <cmath>
#include <random>

#include "fraudx/ingest.hpp"

namespace fraudx {

Partition stratified_partition(const std::vector<int>& labels, double holdout_fraction,
                               std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw IngestError("holdout fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw IngestError("labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2) {
      throw IngestError("cannot stratify: class " + std::to_string(c) + " has " +
                        std::to_string(by_class[c].size()) + " member(s), need at least 2");
    }
  }

  // Total holdout is fixed first so the split sizes are exact; the positive
  // class gets its proportional share and the rest comes from the negatives.
  const auto n = static_cast<double>(labels.size());
  const auto total = static_cast<std::size_t>(std::llround(n * holdout_fraction));
  auto n_pos = static_cast<std::size_t>(
      std::llround(static_cast<double>(by_class[1].size()) * holdout_fraction));
  n_pos = std::clamp<std::size_t>(n_pos, 1, by_class[1].size() - 1);
  const std::size_t n_neg = std::min(total - std::min(total, n_pos), by_class[0].size() - 1);

  std::mt19937_64 rng(seed);
  Partition part;
  const std::size_t take[2] = {n_neg, n_pos};
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    part.validation.insert(part.validation.end(), idx.begin(), idx.begin() + take[c]);
    part.train.insert(part.train.end(), idx.begin() + take[c], idx.end());
  }
  std::sort(part.train.begin(), part.train.end());
  std::sort(part.validation.begin(), part.validation.end());
  return part;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double holdout_fraction,
                                  std::uint64_t seed) {
  if (!dataset.labels) throw IngestError("split requires a labelled dataset");
  const auto part = stratified_partition(*dataset.labels, holdout_fraction, seed);
  return {dataset.subset(part.train), dataset.subset(part.validation)};
}

std::pair<Dataset, Dataset> load_split(const std::filesystem::path& path, const SchemaConfig& config,
                                       double holdout_fraction, std::uint64_t seed) {
  const auto records = load_csv(path, config);
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) throw IngestError("record " + r.id + " has no label; splitting needs labels");
    labels.push_back(*r.label);
  }
  const auto part = stratified_partition(labels, holdout_fraction, seed);
  const auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<RawRecord> out;
    out.reserve(idx.size());
    for (const auto i : idx) out.push_back(records[i]);
    return out;
  };
  const auto train_records = pick(part.train);
  const auto schema = fit_schema(train_records, config.feature_columns());
  return {encode(train_records, schema), encode(pick(part.validation), schema)};
}

}  // namespace fraudx
