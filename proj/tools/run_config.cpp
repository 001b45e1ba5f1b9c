#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace fraudx::cli {
namespace {

std::string join_lines(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

// Typed access to one JSON object that records problems instead of throwing
// and flags keys nobody asked for.
class Reader {
 public:
  Reader(const Json& json, std::string where, std::vector<std::string>& problems)
      : json_(json), where_(std::move(where)), problems_(problems) {
    if (!json_.is_object()) problem("must be an object");
  }

  bool has(const std::string& key) {
    if (!json_.is_object() || !json_.contains(key)) return false;
    seen_.insert(key);
    return !json_.at(key).is_null();
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    return json_.at(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    read(json_.at(key), key, out);
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    T value{};
    if (read(json_.at(key), key, value)) out = value;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void problem(const std::string& what) { problems_.push_back(where_ + ": " + what); }
  std::vector<std::string>& problems() { return problems_; }

  void finish() {
    if (!json_.is_object()) return;
    for (const auto& [key, value] : json_.items()) {
      if (!seen_.count(key)) problems_.push_back(path(key) + ": unknown key");
    }
  }

 private:
  bool read(const Json& v, const std::string& key, bool& out) {
    if (!v.is_boolean()) return fail(key, "expected true or false");
    out = v.get<bool>();
    return true;
  }
  bool read(const Json& v, const std::string& key, double& out) {
    if (!v.is_number()) return fail(key, "expected a number");
    out = v.get<double>();
    return true;
  }
  bool read(const Json& v, const std::string& key, int& out) {
    if (!v.is_number_integer()) return fail(key, "expected an integer");
    out = v.get<int>();
    return true;
  }
  bool read(const Json& v, const std::string& key, std::size_t& out) {
    if (!v.is_number_unsigned()) return fail(key, "expected a nonnegative integer");
    out = v.get<std::size_t>();
    return true;
  }
  bool read(const Json& v, const std::string& key, std::string& out) {
    if (!v.is_string()) return fail(key, "expected a string");
    out = v.get<std::string>();
    return true;
  }
  bool read(const Json& v, const std::string& key, std::vector<int>& out) {
    if (!v.is_array()) return fail(key, "expected an array of integers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer()) return fail(key, "expected an array of integers");
      out.push_back(e.get<int>());
    }
    return true;
  }
  bool read(const Json& v, const std::string& key, std::vector<std::size_t>& out) {
    if (!v.is_array()) return fail(key, "expected an array of nonnegative integers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) return fail(key, "expected an array of nonnegative integers");
      out.push_back(e.get<std::size_t>());
    }
    return true;
  }

  bool fail(const std::string& key, const std::string& what) {
    problems_.push_back(path(key) + ": " + what);
    return false;
  }

  const Json& json_;
  std::string where_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void read_mlp(Reader& r, MlpParams& p) {
  r.get("hidden", p.hidden);
  r.get("learning_rate", p.learning_rate);
  r.get("beta1", p.beta1);
  r.get("beta2", p.beta2);
  r.get("epsilon", p.epsilon);
  r.get("batch_size", p.batch_size);
  r.get("epochs", p.epochs);
}

void read_params(Reader& r, Hyperparameters& params) {
  std::visit(
      [&r](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          r.get("alpha", p.alpha);
          r.get("var_smoothing", p.var_smoothing);
        } else if constexpr (std::is_same_v<P, LogisticRegressionParams>) {
          r.get("l2", p.l2);
          r.get("max_iter", p.max_iter);
          r.get("tolerance", p.tolerance);
        } else if constexpr (std::is_same_v<P, DecisionTreeParams>) {
          r.get("max_depth", p.max_depth);
          r.get("min_samples_split", p.min_samples_split);
          r.get("min_samples_leaf", p.min_samples_leaf);
        } else if constexpr (std::is_same_v<P, RandomForestParams>) {
          r.get("n_estimators", p.n_estimators);
          r.get("max_depth", p.max_depth);
          r.get("min_samples_split", p.min_samples_split);
          r.get("min_samples_leaf", p.min_samples_leaf);
          r.get("max_features", p.max_features);
        } else if constexpr (std::is_same_v<P, GradientBoostingParams>) {
          r.get("n_estimators", p.n_estimators);
          r.get("max_depth", p.max_depth);
          r.get("learning_rate", p.learning_rate);
          r.get("min_samples_leaf", p.min_samples_leaf);
          r.get("l2_leaf", p.l2_leaf);
        } else if constexpr (std::is_same_v<P, NeuralNetworkParams>) {
          read_mlp(r, p.mlp);
        } else if constexpr (std::is_same_v<P, AutoencoderParams>) {
          read_mlp(r, p.mlp);
          r.get("contamination", p.contamination);
        } else if constexpr (std::is_same_v<P, IsolationForestParams>) {
          r.get("n_estimators", p.n_estimators);
          r.get("max_samples", p.max_samples);
          r.get("contamination", p.contamination);
        }
      },
      params);
}

Json mlp_json(const MlpParams& p) {
  return {{"hidden", p.hidden},     {"learning_rate", p.learning_rate},
          {"beta1", p.beta1},       {"beta2", p.beta2},
          {"epsilon", p.epsilon},   {"batch_size", p.batch_size},
          {"epochs", p.epochs}};
}

Json params_json(const Hyperparameters& params) {
  return std::visit(
      [](const auto& p) -> Json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          return {{"alpha", p.alpha}, {"var_smoothing", p.var_smoothing}};
        } else if constexpr (std::is_same_v<P, LogisticRegressionParams>) {
          return {{"l2", p.l2}, {"max_iter", p.max_iter}, {"tolerance", p.tolerance}};
        } else if constexpr (std::is_same_v<P, DecisionTreeParams>) {
          return {{"max_depth", p.max_depth},
                  {"min_samples_split", p.min_samples_split},
                  {"min_samples_leaf", p.min_samples_leaf}};
        } else if constexpr (std::is_same_v<P, RandomForestParams>) {
          return {{"n_estimators", p.n_estimators},
                  {"max_depth", p.max_depth},
                  {"min_samples_split", p.min_samples_split},
                  {"min_samples_leaf", p.min_samples_leaf},
                  {"max_features", p.max_features}};
        } else if constexpr (std::is_same_v<P, GradientBoostingParams>) {
          return {{"n_estimators", p.n_estimators},
                  {"max_depth", p.max_depth},
                  {"learning_rate", p.learning_rate},
                  {"min_samples_leaf", p.min_samples_leaf},
                  {"l2_leaf", p.l2_leaf}};
        } else if constexpr (std::is_same_v<P, NeuralNetworkParams>) {
          return mlp_json(p.mlp);
        } else if constexpr (std::is_same_v<P, AutoencoderParams>) {
          auto j = mlp_json(p.mlp);
          j["contamination"] = p.contamination;
          return j;
        } else {
          return {{"n_estimators", p.n_estimators},
                  {"max_samples", p.max_samples},
                  {"contamination", p.contamination}};
        }
      },
      params);
}

Json background_json(const BackgroundConfig& b) {
  return {{"strategy", std::string(to_string(b.strategy))}, {"size", b.size}};
}

void read_background(Reader& parent, const std::string& key, BackgroundConfig& out) {
  if (!parent.has(key)) return;
  Reader r(parent.at(key), parent.path(key), parent.problems());
  std::string strategy;
  r.get("strategy", strategy);
  if (!strategy.empty()) {
    try {
      out.strategy = parse_background_strategy(strategy);
    } catch (const std::exception& e) {
      r.problem(e.what());
    }
  }
  r.get("size", out.size);
  if (out.strategy == BackgroundStrategy::Custom) r.problem("custom backgrounds cannot be configured");
  if (out.strategy == BackgroundStrategy::Subsample && out.size == 0) {
    r.problem("subsample needs size > 0");
  }
  r.finish();
}

void read_dataset(Reader& root, DatasetConfig& out, const std::filesystem::path& base_dir,
                  std::uint64_t run_seed) {
  if (!root.has("dataset")) {
    root.problem("missing key 'dataset'");
    return;
  }
  Reader r(root.at("dataset"), root.path("dataset"), root.problems());
  r.get("holdout_fraction", out.holdout_fraction);
  if (!(out.holdout_fraction > 0.0 && out.holdout_fraction < 1.0)) {
    r.problem("holdout_fraction must lie in (0, 1)");
  }
  std::string csv, schema;
  r.get("csv", csv);
  r.get("schema", schema);
  const bool synthetic = r.has("synthetic");
  if (synthetic == !csv.empty()) {
    r.problem("give either 'csv' (with 'schema') or 'synthetic'");
  }
  if (!csv.empty()) {
    out.csv = (base_dir / csv).lexically_normal();
    if (!std::filesystem::exists(*out.csv)) r.problem("csv file not found: " + out.csv->string());
    if (schema.empty()) {
      r.problem("'csv' needs a 'schema' config");
    } else {
      out.schema = (base_dir / schema).lexically_normal();
      if (!std::filesystem::exists(*out.schema)) {
        r.problem("schema file not found: " + out.schema->string());
      }
    }
  } else if (!schema.empty()) {
    r.problem("'schema' applies to csv datasets only");
  }
  if (synthetic) {
    Reader s(r.at("synthetic"), r.path("synthetic"), r.problems());
    SyntheticSpec spec;
    std::string layout = "generic";
    s.get("layout", layout);
    if (layout == "transaction") {
      const auto l = transaction_feature_layout();
      spec.n_numeric = l.numeric.size();
      spec.n_categorical = l.categorical.size();
      spec.feature_names = l.numeric;
      spec.feature_names.insert(spec.feature_names.end(), l.categorical.begin(), l.categorical.end());
    } else if (layout != "generic") {
      s.problem("layout must be 'generic' or 'transaction'");
    }
    s.get("n_rows", spec.n_rows);
    if (layout == "generic") {
      s.get("n_numeric", spec.n_numeric);
      s.get("n_categorical", spec.n_categorical);
    }
    s.get("fraud_rate", spec.fraud_rate);
    s.get("n_informative", spec.n_informative);
    s.get("categories_per_column", spec.categories_per_column);
    std::optional<std::size_t> seed;
    s.get("seed", seed);
    spec.seed = seed ? *seed : derive_seed(run_seed, 1);
    s.finish();
    out.synthetic = spec;
  }
  r.finish();
}

void read_models(Reader& root, std::vector<ModelEntry>& out, std::uint64_t seed) {
  if (!root.has("models")) {
    for (const auto kind : kAllModelKinds) {
      const std::string id(to_string(kind));
      out.push_back({id, ModelSpec::defaults(kind, derive_seed(seed, fnv1a(id)))});
    }
    return;
  }
  const auto& list = root.at("models");
  if (!list.is_array() || list.empty()) {
    root.problem("'models' must be a nonempty array");
    return;
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto where = root.path("models") + "[" + std::to_string(i) + "]";
    const auto& item = list[i];
    std::string kind_name, id;
    std::optional<std::size_t> model_seed;
    bool class_weighting = false;
    const Json* params = nullptr;
    if (item.is_string()) {
      kind_name = item.get<std::string>();
    } else {
      Reader r(item, where, root.problems());
      r.get("kind", kind_name);
      r.get("id", id);
      r.get("seed", model_seed);
      r.get("class_weighting", class_weighting);
      if (r.has("params")) params = &r.at("params");
      r.finish();
      if (kind_name.empty()) root.problems().push_back(where + ": missing 'kind'");
    }
    if (kind_name.empty()) continue;
    ModelKind kind;
    try {
      kind = parse_model_kind(kind_name);
    } catch (const std::exception& e) {
      root.problems().push_back(where + ": " + e.what());
      continue;
    }
    if (id.empty()) id = kind_name;
    if (!ids.insert(id).second) {
      root.problems().push_back(where + ": duplicate model id '" + id + "'");
    }
    auto spec = ModelSpec::defaults(kind, model_seed ? *model_seed : derive_seed(seed, fnv1a(id)));
    spec.class_weighting = class_weighting;
    if (params) {
      Reader p(*params, where + ".params", root.problems());
      read_params(p, spec.params);
      p.finish();
    }
    out.push_back({id, std::move(spec)});
  }
}

void read_explainer(Reader& root, ExplainerSettings& out, std::uint64_t seed) {
  out.seed = derive_seed(seed, 2);
  if (!root.has("explainer")) return;
  Reader r(root.at("explainer"), root.path("explainer"), root.problems());
  if (r.has("n_coalitions")) {
    const auto& v = r.at("n_coalitions");
    if (v.is_string() && v.get<std::string>() == "full") {
      out.n_coalitions = CoalitionBudget::all_coalitions();
    } else if (v.is_number_unsigned() && v.get<std::size_t>() > 0) {
      out.n_coalitions = CoalitionBudget::samples(v.get<std::size_t>());
    } else {
      r.problem("n_coalitions must be a positive integer or \"full\"");
    }
  }
  r.get("n_perturbations", out.lime.n_perturbations);
  r.get("kernel_width", out.lime.kernel_width);
  r.get("ridge", out.lime.ridge);
  r.get("top_k", out.top_k);
  out.lime.top_k = out.top_k;
  std::optional<std::size_t> explainer_seed;
  r.get("seed", explainer_seed);
  if (explainer_seed) out.seed = *explainer_seed;
  if (out.top_k == 0) r.problem("top_k must be positive");
  if (out.lime.n_perturbations < 2) r.problem("n_perturbations must be at least 2");
  r.finish();
}

void read_study(Reader& root, StudyConfig& out) {
  if (!root.has("study")) return;
  Reader r(root.at("study"), root.path("study"), root.problems());
  if (r.has("explainers")) {
    const auto& list = r.at("explainers");
    out.explainers.clear();
    if (!list.is_array()) r.problem("explainers must be an array");
    for (const auto& e : list) {
      try {
        out.explainers.push_back(parse_explain_method(e.get<std::string>()));
      } catch (const std::exception& ex) {
        r.problem(std::string("explainers: ") + ex.what());
      }
    }
  }
  r.get("timing_sizes", out.timing_sizes);
  r.get("timing_lime", out.timing_lime);
  r.get("timing_repeats", out.timing_repeats);
  r.get("timing_warm_up", out.timing_warm_up);
  r.get("tradeoff_draws", out.tradeoff_draws);
  r.get("stability_threshold", out.stability_threshold);
  if (out.timing_repeats < 3) r.problem("timing_repeats must be at least 3");
  if (out.tradeoff_draws == 0) r.problem("tradeoff_draws must be positive");
  r.finish();
}

Json effective_json(const RunConfig& c) {
  Json dataset = {{"holdout_fraction", c.dataset.holdout_fraction}};
  if (c.dataset.csv) {
    dataset["csv"] = c.dataset.csv->string();
    dataset["schema"] = c.dataset.schema->string();
  } else if (c.dataset.synthetic) {
    const auto& s = *c.dataset.synthetic;
    dataset["synthetic"] = {{"n_rows", s.n_rows},
                            {"n_numeric", s.n_numeric},
                            {"n_categorical", s.n_categorical},
                            {"fraud_rate", s.fraud_rate},
                            {"n_informative", s.n_informative},
                            {"categories_per_column", s.categories_per_column},
                            {"seed", s.seed},
                            {"feature_names", s.feature_names}};
  }
  Json models = Json::array();
  for (const auto& m : c.models) {
    models.push_back({{"id", m.id},
                      {"kind", std::string(to_string(m.spec.kind))},
                      {"seed", m.spec.seed},
                      {"class_weighting", m.spec.class_weighting},
                      {"params", params_json(m.spec.params)}});
  }
  const auto& e = c.explainer;
  Json n_coalitions = nullptr;
  if (e.n_coalitions) {
    n_coalitions = e.n_coalitions->full ? Json("full") : Json(e.n_coalitions->count);
  }
  Json explainers = Json::array();
  for (const auto m : c.study.explainers) explainers.push_back(std::string(to_string(m)));
  return {
      {"seed", c.seed},
      {"out", c.out.string()},
      {"dataset", std::move(dataset)},
      {"models", std::move(models)},
      {"explainer", {{"n_coalitions", n_coalitions},
                     {"n_perturbations", e.lime.n_perturbations},
                     {"kernel_width", e.lime.kernel_width ? Json(*e.lime.kernel_width) : Json(nullptr)},
                     {"ridge", e.lime.ridge},
                     {"top_k", e.top_k},
                     {"seed", e.seed}}},
      {"backgrounds", {{"explain", background_json(c.explain_background)},
                       {"normal", background_json(c.normal_background)},
                       {"fraud", background_json(c.fraud_background)}}},
      {"instance", c.instance ? Json(*c.instance) : Json(nullptr)},
      {"study", {{"explainers", std::move(explainers)},
                 {"timing_sizes", c.study.timing_sizes},
                 {"timing_lime", c.study.timing_lime},
                 {"timing_repeats", c.study.timing_repeats},
                 {"timing_warm_up", c.study.timing_warm_up},
                 {"tradeoff_draws", c.study.tradeoff_draws},
                 {"stability_threshold", c.study.stability_threshold}}},
  };
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

std::string DatasetConfig::description() const {
  if (csv) return csv->string();
  if (!synthetic) return "";
  return "synthetic(n_rows=" + std::to_string(synthetic->n_rows) +
         ", features=" + std::to_string(synthetic->n_numeric + synthetic->n_categorical) +
         ", seed=" + std::to_string(synthetic->seed) + ")";
}

const ModelEntry* RunConfig::find_model(const std::string& id) const {
  for (const auto& m : models) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

RunConfig parse_run_config(const Json& json, const std::filesystem::path& base_dir,
                           const Overrides& overrides) {
  std::vector<std::string> problems;
  RunConfig config;
  Reader root(json, "config", problems);

  std::optional<std::size_t> seed;
  root.get("seed", seed);
  if (overrides.seed) seed = *overrides.seed;
  if (!seed) problems.push_back("config.seed: missing (a seed is mandatory; use the key or --seed)");
  config.seed = seed.value_or(0);

  std::string out;
  root.get("out", out);
  if (overrides.out) {
    config.out = *overrides.out;
  } else if (!out.empty()) {
    config.out = (base_dir / out).lexically_normal();
  } else {
    problems.push_back("config.out: missing (use the key or --out)");
  }

  read_dataset(root, config.dataset, base_dir, config.seed);
  read_models(root, config.models, config.seed);
  read_explainer(root, config.explainer, config.seed);
  if (root.has("backgrounds")) {
    Reader b(root.at("backgrounds"), root.path("backgrounds"), problems);
    read_background(b, "explain", config.explain_background);
    read_background(b, "normal", config.normal_background);
    read_background(b, "fraud", config.fraud_background);
    b.finish();
  }
  std::string instance;
  root.get("instance", instance);
  if (!instance.empty()) config.instance = instance;
  read_study(root, config.study);
  root.finish();

  if (!problems.empty()) throw ConfigError(std::move(problems));
  config.effective = effective_json(config);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  Json json;
  try {
    json = Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError({"config " + path.string() + " is not valid JSON: " + e.what()});
  }
  return parse_run_config(json, path.parent_path(), overrides);
}

BackgroundSpec to_spec(const BackgroundConfig& config, std::uint64_t seed) {
  BackgroundSpec spec;
  spec.strategy = config.strategy;
  spec.size = config.size;
  spec.seed = seed;
  return spec;
}

}  // namespace fraudx::cli
