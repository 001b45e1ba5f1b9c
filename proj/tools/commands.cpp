#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace fraudx::cli {
namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int digits = 3) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

std::string pad(std::string text, std::size_t width) {
  if (text.size() < width) text.append(width - text.size(), ' ');
  return text;
}

void write_config(const RunConfig& config) {
  write_text(config.out / "config.json", dump(config.effective));
}

fs::path model_path(const RunConfig& config, const std::string& id) {
  return config.out / "models" / (id + ".model");
}

std::vector<NamedModel> load_models(const RunConfig& config) {
  std::vector<std::string> missing;
  for (const auto& m : config.models) {
    if (!fs::exists(model_path(config, m.id))) missing.push_back(model_path(config, m.id).string());
  }
  if (!missing.empty()) {
    std::string message = "trained models missing (run `train` first):";
    for (const auto& p : missing) message += "\n  - " + p;
    throw std::runtime_error(message);
  }
  std::vector<NamedModel> models;
  for (const auto& m : config.models) models.push_back({m.id, load_model(model_path(config, m.id))});
  return models;
}

std::optional<ModelKind> standard_kind(const NamedModel& m) {
  if (m.sf.kind() == ModelKind::Custom) return std::nullopt;
  return m.sf.kind();
}

std::vector<Table1Row> evaluate_all(const std::vector<NamedModel>& models, const Dataset& data) {
  std::vector<Table1Row> rows;
  for (const auto& m : models) rows.push_back({m.id, evaluate(m.sf, data), standard_kind(m)});
  return rows;
}

void print_table1(const std::vector<Table1Row>& rows, std::ostream& log) {
  log << pad("model", 20) << pad("precision", 11) << pad("recall", 9) << pad("f1", 8)
      << pad("auc", 8) << pad("ref_auc", 9) << "\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    const auto ref = row.kind ? reference_metrics(*row.kind) : std::nullopt;
    log << pad(row.model_kind, 20) << pad(fixed(r.precision), 11) << pad(fixed(r.recall), 9)
        << pad(fixed(r.f1), 8) << pad(r.auc ? fixed(*r.auc) : "-", 8)
        << pad(ref ? fixed(ref->auc) : "-", 9);
    if (ref && r.auc && std::abs(*r.auc - ref->auc) > kReferenceAucTolerance) {
      log << "outside +/-" << fixed(kReferenceAucTolerance, 2) << " of reference";
    }
    log << "\n";
  }
}

struct Instance {
  std::string id;
  std::vector<double> values;
};

Instance pick_instance(const RunConfig& config, const LoadedData& data,
                       const std::optional<std::string>& requested) {
  const auto id = requested ? requested : config.instance;
  if (id) {
    for (const Dataset* d : {&data.validation, &data.train}) {
      if (const auto row = d->find_row(*id)) {
        const auto r = d->matrix.row(*row);
        return {*id, {r.begin(), r.end()}};
      }
    }
    throw std::runtime_error("unknown instance_id '" + *id + "'");
  }
  const auto& v = data.validation;
  for (std::size_t i = 0; i < v.n_rows(); ++i) {
    if (v.labels && (*v.labels)[i] == 0) {
      const auto r = v.matrix.row(i);
      return {v.row_ids[i], {r.begin(), r.end()}};
    }
  }
  throw std::runtime_error("validation data has no normal instance to explain");
}

std::string table_row(const RankedFeature& e) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%+.6g", e.phi);
  return pad(std::to_string(e.rank), 6) + pad(e.feature_name, 24) + buffer;
}

void write_synthetic_csv(const SyntheticData& synth, const fs::path& dir) {
  const auto& d = synth.dataset;
  const auto& schema = *d.schema;
  std::ostringstream csv, config;
  csv << "TransactionID";
  config << "TransactionID = ignore\n";
  for (const auto& c : schema.columns) {
    csv << ',' << c.name;
    config << c.name << " = " << (c.kind == ColumnKind::Categorical ? "categorical" : "numeric")
           << "\n";
  }
  csv << ",isFraud\n";
  config << "isFraud = label\n";
  char buffer[32];
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    csv << d.row_ids[i];
    for (std::size_t j = 0; j < schema.size(); ++j) {
      csv << ',';
      const double v = d.matrix(i, j);
      if (schema.is_categorical(j)) {
        csv << decode_category(schema, j, static_cast<int>(v));
      } else {
        std::snprintf(buffer, sizeof buffer, "%.17g", v);
        csv << buffer;
      }
    }
    csv << ',' << (*d.labels)[i] << "\n";
  }
  write_text(dir / "synthetic.csv", csv.str());
  write_text(dir / "synthetic.schema", config.str());
  Json weights = Json::array();
  for (const auto& w : synth.weights) {
    weights.push_back({{"feature", w.feature}, {"name", w.name}, {"weight", w.weight}});
  }
  write_text(dir / "generative_weights.json",
             dump({{"intercept", synth.intercept}, {"weights", std::move(weights)}}));
}

const NamedModel* find_kind(const std::vector<NamedModel>& models, ModelKind kind) {
  for (const auto& m : models) {
    if (m.sf.kind() == kind) return &m;
  }
  return nullptr;
}

}  // namespace

LoadedData load_data(const RunConfig& config) {
  LoadedData out;
  const auto split_seed = derive_seed(config.seed, 0);
  if (config.dataset.csv) {
    const auto schema = SchemaConfig::load(*config.dataset.schema);
    std::tie(out.train, out.validation) =
        load_split(*config.dataset.csv, schema, config.dataset.holdout_fraction, split_seed);
  } else {
    out.synthetic = generate_synthetic(*config.dataset.synthetic);
    std::tie(out.train, out.validation) =
        split(out.synthetic->dataset, config.dataset.holdout_fraction, split_seed);
  }
  return out;
}

Study parse_study(const std::string& name) {
  if (name == "agreement") return Study::Agreement;
  if (name == "sensitivity") return Study::Sensitivity;
  if (name == "timing") return Study::Timing;
  if (name == "tradeoff") return Study::Tradeoff;
  if (name == "all") return Study::All;
  throw std::invalid_argument("unknown study '" + name +
                              "' (expected agreement, sensitivity, timing, tradeoff or all)");
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
  if (!config.dataset.synthetic) throw std::runtime_error("synth needs a synthetic dataset config");
  write_config(config);
  const auto data = load_data(config);
  write_synthetic_csv(*data.synthetic, config.out / "data");
  log << "wrote " << data.synthetic->dataset.n_rows() << " rows to "
      << (config.out / "data" / "synthetic.csv").string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  write_config(config);
  const auto data = load_data(config);
  std::vector<NamedModel> models;
  fs::create_directories(config.out / "models");
  for (const auto& m : config.models) {
    auto sf = train(m.spec, data.train);
    save_model(sf, model_path(config, m.id));
    models.push_back({m.id, std::move(sf)});
  }
  const auto rows = evaluate_all(models, data.validation);
  Json table = Json::array();
  for (const auto& r : rows) table.push_back(to_json(r));
  write_text(config.out / "train" / "table1.json", dump(table));
  write_text(config.out / "train" / "table1.csv", table1_csv(rows));
  print_table1(rows, log);
  return 0;
}

int cmd_evaluate(const RunConfig& config, std::ostream& log) {
  write_config(config);
  const auto data = load_data(config);
  const auto rows = evaluate_all(load_models(config), data.validation);
  Json table = Json::array();
  for (const auto& r : rows) table.push_back(to_json(r));
  write_text(config.out / "evaluate" / "table1.json", dump(table));
  write_text(config.out / "evaluate" / "table1.csv", table1_csv(rows));
  print_table1(rows, log);
  return 0;
}

int cmd_explain(const RunConfig& config, const ExplainRequest& request, std::ostream& log) {
  const auto* entry = config.find_model(request.model_id);
  if (!entry) throw std::runtime_error("unknown model id '" + request.model_id + "'");
  const auto path = model_path(config, entry->id);
  if (!fs::exists(path)) {
    throw std::runtime_error("trained model missing (run `train` first): " + path.string());
  }
  write_config(config);
  const auto sf = load_model(path);
  const auto data = load_data(config);
  const auto instance = pick_instance(config, data, request.instance_id);
  const auto bg_config = request.background.value_or(config.explain_background);
  const auto background = resolve_background(to_spec(bg_config, derive_seed(config.seed, 3)), data.train);

  const auto attr = explain_instance(sf, request.method, instance.values, background, data.train,
                                     config.explainer);
  const auto ranked = rank(attr, config.explainer.top_k);
  Json out = {
      {"model_id", entry->id},
      {"instance_id", instance.id},
      {"background", {{"strategy", std::string(to_string(bg_config.strategy))},
                      {"size", bg_config.size},
                      {"rows", background.resolved_rows.rows()}}},
      {"attribution", to_json(attr)},
      {"ranking", to_json(ranked)},
  };
  const auto file = config.out / "explanations" /
                    (entry->id + "__" + std::string(to_string(request.method)) + "__" +
                     instance.id + ".json");
  write_text(file, dump(out));

  log << entry->id << " " << to_string(request.method) << " instance " << instance.id
      << ": base " << fixed(attr.base_value, 6) << ", predicted " << fixed(attr.predicted_value, 6)
      << "\n";
  for (const auto& e : ranked.entries) log << table_row(e) << "\n";
  log << "wrote " << file.string() << "\n";
  return 0;
}

int cmd_study(const RunConfig& config, Study which, std::ostream& log) {
  const auto models = load_models(config);
  write_config(config);
  const auto data = load_data(config);
  const auto instance = pick_instance(config, data, std::nullopt);
  const auto all = which == Study::All;

  StudyReport report;
  report.meta = {config.seed, config.dataset.description(), git_describe()};
  if (all) report.table1 = evaluate_all(models, data.validation);

  if (all || which == Study::Agreement) {
    const auto* lr = find_kind(models, ModelKind::LogisticRegression);
    if (!lr) throw std::runtime_error("agreement study needs a LogisticRegression model");
    const auto reference = global_lr_importance(lr->sf, data.train, config.explainer.top_k);
    const auto background = resolve_background(
        to_spec(config.explain_background, derive_seed(config.seed, 3)), data.train);
    report.agreement = run_agreement_study(models, config.study.explainers, instance.values,
                                           background, reference, data.train, config.explainer);
    log << "agreement: " << report.agreement.size() << " reports\n";
  }
  if (all || which == Study::Sensitivity) {
    const auto normal = resolve_background(
        to_spec(config.normal_background, derive_seed(config.seed, 4)), data.train);
    const auto fraud = resolve_background(
        to_spec(config.fraud_background, derive_seed(config.seed, 5)), data.train);
    auto settings = config.explainer;
    if (data.train.schema) settings.feature_names = data.train.schema->feature_names();
    report.sensitivity = run_sensitivity_study(models, instance.values, normal, fraud, settings,
                                               config.study.stability_threshold);
    log << "sensitivity: " << report.sensitivity.size() << " models\n";
  }
  if (all || which == Study::Timing) {
    TimingOptions options;
    options.sizes = config.study.timing_sizes;
    options.lime_enabled = config.study.timing_lime;
    options.n_repeats = config.study.timing_repeats;
    options.warm_up = config.study.timing_warm_up;
    options.background_seed = derive_seed(config.seed, 6);
    report.timing = run_timing_study(models, instance.values, instance.id, data.train, data.train,
                                     config.explainer, options);
    log << "timing: " << report.timing.size() << " cells\n";
  }
  if (all || which == Study::Tradeoff) {
    report.tradeoff = background_tradeoff(models, data.train, config.study.timing_sizes,
                                          derive_seed(config.seed, 7), config.study.tradeoff_draws);
    log << "tradeoff: " << report.tradeoff.size() << " rows\n";
  }

  static const char* names[] = {"agreement", "sensitivity", "timing", "tradeoff", "all"};
  const auto dir = config.out / "study" / names[static_cast<int>(which)];
  write_report(report, dir);
  log << "wrote " << (dir / "report.json").string() << "\n";
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fraud-detection models with KernelSHAP and LIME explanations", "fraudx"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "Run config (JSON)")->required();
  app.add_option("--seed", seed, "Overrides the config seed");
  app.add_option("--out", out_dir, "Overrides the config output directory");

  auto* synth = app.add_subcommand("synth", "Write the configured synthetic dataset as CSV");
  auto* train_cmd = app.add_subcommand("train", "Train every configured model and report metrics");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score trained models on the validation split");

  ExplainRequest request;
  std::string method = "kernel_shap";
  std::optional<std::string> background;
  std::optional<std::size_t> background_size;
  auto* explain = app.add_subcommand("explain", "Explain one instance with one model");
  explain->add_option("--model", request.model_id, "Model id")->required();
  explain->add_option("--instance", request.instance_id, "Row id (default: first normal validation row)");
  explain->add_option("--method", method, "kernel_shap, exact_shapley or lime");
  explain->add_option("--background", background,
                      "all, subsample, normal_only or fraud_only");
  explain->add_option("--background-size", background_size, "Rows to subsample (0 = all)");

  std::string which = "all";
  auto* study = app.add_subcommand("study", "Run the agreement, sensitivity, timing and tradeoff studies");
  study->add_option("--which", which, "agreement, sensitivity, timing, tradeoff or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    Overrides overrides;
    overrides.seed = seed;
    if (out_dir) overrides.out = fs::path(*out_dir);
    const auto config = load_run_config(config_path, overrides);
    if (*synth) return cmd_synth(config, out);
    if (*train_cmd) return cmd_train(config, out);
    if (*evaluate_cmd) return cmd_evaluate(config, out);
    if (*explain) {
      request.method = parse_explain_method(method);
      if (background || background_size) {
        BackgroundConfig b = config.explain_background;
        if (background) b.strategy = parse_background_strategy(*background);
        if (background_size) b.size = *background_size;
        request.background = b;
      }
      return cmd_explain(config, request, out);
    }
    if (*study) return cmd_study(config, parse_study(which), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace fraudx::cli
