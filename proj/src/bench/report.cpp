#include "fraudx/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fraudx {
namespace {

Json optional_number(const std::optional<double>& value) {
  return value ? Json(*value) : Json(nullptr);
}

std::string number(double v) {
  if (!std::isfinite(v)) return "";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::string number(const std::optional<double>& v) { return v ? number(*v) : ""; }

std::string quoted(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string joined(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ';';
    out += items[i];
  }
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string> header) { row(header); }

  void row(std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out_ << ',';
      out_ << quoted(f);
      first = false;
    }
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

template <typename T>
Json array_of(const std::vector<T>& items) {
  Json out = Json::array();
  for (const auto& item : items) out.push_back(to_json(item));
  return out;
}

}  // namespace

Json to_json(const Attribution& attr) {
  const auto& d = attr.diagnostics;
  Json diagnostics = {
      {"coalitions", d.coalitions},
      {"perturbations", d.perturbations},
      {"full_enumeration", d.full_enumeration},
      {"background_rows", d.background_rows},
      {"local_accuracy_residual", optional_number(d.local_accuracy_residual)},
      {"regression_residual", optional_number(d.regression_residual)},
      {"surrogate_r2", optional_number(d.surrogate_r2)},
      {"surrogate_prediction", optional_number(d.surrogate_prediction)},
      {"discrepancy", optional_number(d.discrepancy)},
      {"selected_features", d.selected_features},
  };
  return {
      {"method", std::string(to_string(attr.method))},
      {"feature_names", attr.feature_names},
      {"phi", attr.phi},
      {"base_value", attr.base_value},
      {"predicted_value", attr.predicted_value},
      {"diagnostics", std::move(diagnostics)},
  };
}

Json to_json(const RankedFeatures& ranked) {
  Json entries = Json::array();
  for (const auto& e : ranked.entries) {
    entries.push_back({{"rank", e.rank},
                       {"feature_name", e.feature_name},
                       {"feature_index", e.feature_index},
                       {"phi", e.phi}});
  }
  return {{"k", ranked.k}, {"entries", std::move(entries)}};
}

Json to_json(const EvalReport& r) {
  return {
      {"precision", r.precision},
      {"recall", r.recall},
      {"f1", r.f1},
      {"macro_precision", r.macro_precision},
      {"macro_recall", r.macro_recall},
      {"macro_f1", r.macro_f1},
      {"auc", optional_number(r.auc)},
      {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn},
                     {"fn", r.confusion.fn}}},
      {"n_rows", r.n_rows},
  };
}

Json to_json(const Table1Row& row) {
  Json out = {{"model_kind", row.model_kind}};
  const auto metrics = to_json(row.report);
  for (const auto& [key, value] : metrics.items()) out[key] = value;
  const auto ref = row.kind ? reference_metrics(*row.kind) : std::nullopt;
  if (ref) {
    out["reference"] = {{"precision", ref->precision},
                        {"recall", ref->recall},
                        {"f1", ref->f1},
                        {"auc", ref->auc}};
    if (row.report.auc) {
      out["auc_delta"] = *row.report.auc - ref->auc;
      out["auc_outside_tolerance"] = std::abs(*row.report.auc - ref->auc) > kReferenceAucTolerance;
    }
  }
  return out;
}

Json to_json(const AgreementReport& r) {
  return {
      {"model_kind", r.model_kind},
      {"explainer", r.explainer},
      {"reference", r.reference},
      {"k", r.k},
      {"overlap_at_10", r.overlap_at_10},
      {"rank_footrule", r.rank_footrule},
      {"features", r.features},
      {"reference_features", r.reference_features},
  };
}

Json to_json(const SensitivityRow& r) {
  return {
      {"model_kind", r.model_kind},
      {"overlap_at_10", r.overlap_at_10},
      {"rank_footrule", r.rank_footrule},
      {"stable", r.stable},
      {"normal_features", r.normal_features},
      {"fraud_features", r.fraud_features},
  };
}

Json to_json(const BenchRecord& r) {
  Json out = {
      {"model_kind", r.model_kind},
      {"explainer", r.explainer},
      {"background_size", r.background_size ? Json(*r.background_size) : Json(nullptr)},
      {"wall_seconds", r.skipped ? Json(nullptr) : Json(r.wall_seconds)},
      {"n_repeats", r.n_repeats},
      {"instance_id", r.instance_id},
      {"samples", r.samples},
      {"skipped", r.skipped},
  };
  if (r.skipped) out["skip_reason"] = r.skip_reason;
  return out;
}

Json to_json(const TradeoffRow& r) {
  return {
      {"model_kind", r.model_kind},
      {"background_size", r.background_size},
      {"mean_base_value", r.mean_base_value},
      {"mean_model_score", r.mean_model_score},
      {"gap", r.gap},
  };
}

Json to_json(const StudyReport& report) {
  return {
      {"meta", {{"seed", report.meta.seed},
                {"dataset", report.meta.dataset},
                {"git_describe", report.meta.git_describe}}},
      {"table1", array_of(report.table1)},
      {"agreement", array_of(report.agreement)},
      {"sensitivity", array_of(report.sensitivity)},
      {"timing", array_of(report.timing)},
      {"tradeoff", array_of(report.tradeoff)},
  };
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

std::string table1_csv(const std::vector<Table1Row>& rows) {
  CsvWriter csv({"model_kind", "precision", "recall", "f1", "macro_precision", "macro_recall",
                 "macro_f1", "auc", "tp", "fp", "tn", "fn", "n_rows", "reference_auc"});
  for (const auto& row : rows) {
    const auto& r = row.report;
    const auto ref = row.kind ? reference_metrics(*row.kind) : std::nullopt;
    csv.row({row.model_kind, number(r.precision), number(r.recall), number(r.f1),
             number(r.macro_precision), number(r.macro_recall), number(r.macro_f1), number(r.auc),
             std::to_string(r.confusion.tp), std::to_string(r.confusion.fp),
             std::to_string(r.confusion.tn), std::to_string(r.confusion.fn),
             std::to_string(r.n_rows), ref ? number(ref->auc) : ""});
  }
  return csv.str();
}

std::string agreement_csv(const std::vector<AgreementReport>& rows) {
  CsvWriter csv({"model_kind", "explainer", "reference", "k", "overlap_at_10", "rank_footrule",
                 "features", "reference_features"});
  for (const auto& r : rows) {
    csv.row({r.model_kind, r.explainer, r.reference, std::to_string(r.k),
             std::to_string(r.overlap_at_10), std::to_string(r.rank_footrule), joined(r.features),
             joined(r.reference_features)});
  }
  return csv.str();
}

std::string sensitivity_csv(const std::vector<SensitivityRow>& rows) {
  CsvWriter csv({"model_kind", "overlap_at_10", "rank_footrule", "stable", "normal_features",
                 "fraud_features"});
  for (const auto& r : rows) {
    csv.row({r.model_kind, std::to_string(r.overlap_at_10), std::to_string(r.rank_footrule),
             r.stable ? "true" : "false", joined(r.normal_features), joined(r.fraud_features)});
  }
  return csv.str();
}

std::string timing_csv(const std::vector<BenchRecord>& rows) {
  CsvWriter csv({"model_kind", "explainer", "background_size", "wall_seconds", "n_repeats",
                 "instance_id", "skipped", "skip_reason"});
  for (const auto& r : rows) {
    csv.row({r.model_kind, r.explainer,
             r.background_size ? std::to_string(*r.background_size) : "",
             r.skipped ? "" : number(r.wall_seconds), std::to_string(r.n_repeats), r.instance_id,
             r.skipped ? "true" : "false", r.skip_reason});
  }
  return csv.str();
}

std::string tradeoff_csv(const std::vector<TradeoffRow>& rows) {
  CsvWriter csv({"model_kind", "background_size", "mean_base_value", "mean_model_score", "gap"});
  for (const auto& r : rows) {
    csv.row({r.model_kind, std::to_string(r.background_size), number(r.mean_base_value),
             number(r.mean_model_score), number(r.gap)});
  }
  return csv.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_report(const StudyReport& report, const std::filesystem::path& dir) {
  write_text(dir / "report.json", dump(to_json(report)));
  if (!report.table1.empty()) write_text(dir / "table1.csv", table1_csv(report.table1));
  if (!report.agreement.empty()) write_text(dir / "agreement.csv", agreement_csv(report.agreement));
  if (!report.sensitivity.empty()) {
    write_text(dir / "sensitivity.csv", sensitivity_csv(report.sensitivity));
  }
  if (!report.timing.empty()) write_text(dir / "timing.csv", timing_csv(report.timing));
  if (!report.tradeoff.empty()) write_text(dir / "tradeoff.csv", tradeoff_csv(report.tradeoff));
}

}  // namespace fraudx
