#include "tsxai/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "tsxai/error.hpp"
#include "tsxai/rng.hpp"

namespace tsxai {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) {
      throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& field, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field, "has the wrong type");
  }
}

std::size_t get_count(const json& j, const char* key, const std::string& field,
                      std::size_t fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(field, "must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base) / path;
  return fs::absolute(path).lexically_normal().string();
}

NamedExplainer parse_explainer(const json& j, std::size_t index) {
  const std::string where = "explainers[" + std::to_string(index) + "]";
  if (j.is_string()) return parse_explainer(json{{"method", j}}, index);
  reject_unknown(j, where,
                 {"name", "method", "epsilon", "reference", "background",
                  "num_samples", "kernel_width", "mask_value", "ridge", "seed",
                  "num_coalitions", "mode"});
  const auto method_name = get<std::string>(j, "method", where + ".method", "");
  const auto method = parse_method(method_name);
  if (!method) {
    throw ConfigError(where + ".method",
                      "unknown method '" + method_name +
                          "' (saliency, lrp, deeplift, lime, shap)");
  }
  NamedExplainer ne;
  ne.explainer.method = *method;
  ne.name = get<std::string>(j, "name", where + ".name", method_name);
  ne.explainer.lrp_epsilon =
      get<double>(j, "epsilon", where + ".epsilon", ne.explainer.lrp_epsilon);
  const char* ref_key = j.contains("background") ? "background" : "reference";
  const auto ref = get<std::string>(j, ref_key, where + "." + ref_key, "zeros");
  const auto rk = parse_reference_kind(ref);
  if (!rk) throw ConfigError(where + "." + ref_key, "must be zeros or train_mean");
  ne.reference = *rk;
  auto& lime = ne.explainer.lime;
  lime.num_samples =
      get_count(j, "num_samples", where + ".num_samples", lime.num_samples);
  if (j.contains("kernel_width") && !j.at("kernel_width").is_null()) {
    lime.kernel_width = get<double>(j, "kernel_width", where + ".kernel_width", 0.0);
  }
  lime.mask_value = get<double>(j, "mask_value", where + ".mask_value", lime.mask_value);
  lime.ridge = get<double>(j, "ridge", where + ".ridge", lime.ridge);
  const auto seed = get<std::uint64_t>(j, "seed", where + ".seed", 0);
  lime.seed = seed;
  auto& shap = ne.explainer.shap;
  shap.seed = seed;
  shap.num_coalitions = get_count(j, "num_coalitions", where + ".num_coalitions",
                                  shap.num_coalitions);
  const auto mode = get<std::string>(j, "mode", where + ".mode", "auto");
  if (mode == "auto") {
    shap.mode = ShapMode::automatic;
  } else if (mode == "exact") {
    shap.mode = ShapMode::exact;
  } else if (mode == "sampled") {
    shap.mode = ShapMode::sampled;
  } else {
    throw ConfigError(where + ".mode", "must be auto, exact or sampled");
  }
  try {
    ne.explainer.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where, e.what());
  }
  return ne;
}

}  // namespace

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  for (Method m : {Method::saliency, Method::lrp, Method::deeplift,
                   Method::lime, Method::shap}) {
    NamedExplainer ne;
    ne.name = std::string(to_string(m));
    ne.explainer.method = m;
    c.explainers.push_back(ne);
  }
  for (Strategy s : kAllStrategies) {
    PerturbationSpec p;
    p.strategy = s;
    c.perturbations.push_back(p);
  }
  return c;
}

RunConfig parse_run_config(const json& j, const std::string& base_dir,
                           const std::string& config_stem) {
  reject_unknown(j, "",
                 {"seed", "output_dir", "threads", "dataset", "model",
                  "explainers", "perturbation", "relevance_mode",
                  "random_repeats", "truth_oracle", "plots", "heatmap_scale"});
  RunConfig rc;
  rc.pipeline = default_pipeline_config();
  auto& pc = rc.pipeline;
  pc.seed = get<std::uint64_t>(j, "seed", "seed", 0);
  rc.threads = get<int>(j, "threads", "threads", 0);

  // Dataset.
  const json ds = j.value("dataset", json::object());
  reject_unknown(ds, "dataset",
                 {"type", "kind", "n", "m", "window_len", "noise_std", "seed",
                  "random_position", "train", "test", "format", "z_normalize"});
  const auto type = get<std::string>(ds, "type", "dataset.type", "synthetic");
  if (type == "synthetic") {
    auto& p = rc.dataset.planted;
    rc.dataset.kind = DatasetSource::Kind::synthetic;
    const auto kind = get<std::string>(ds, "kind", "dataset.kind", "spike");
    const auto pk = parse_planted_kind(kind);
    if (!pk) throw ConfigError("dataset.kind", "must be spike, slope or flat-vs-sine");
    p.kind = *pk;
    p.n = get_count(ds, "n", "dataset.n", p.n);
    p.m = get_count(ds, "m", "dataset.m", p.m);
    p.window_len = get_count(ds, "window_len", "dataset.window_len", p.window_len);
    p.noise_std = get<double>(ds, "noise_std", "dataset.noise_std", p.noise_std);
    p.random_position =
        get<bool>(ds, "random_position", "dataset.random_position", false);
    p.seed = get<std::uint64_t>(ds, "seed", "dataset.seed",
                                derive_seed(pc.seed, "data"));
    if (p.window_len == 0 || p.window_len >= p.m) {
      throw ConfigError("dataset.window_len", "must lie in [1, m)");
    }
    if (p.n == 0 || p.n % 2) throw ConfigError("dataset.n", "must be a positive even number");
    if (!(p.noise_std >= 0.0)) throw ConfigError("dataset.noise_std", "must be >= 0");
  } else if (type == "ucr") {
    rc.dataset.kind = DatasetSource::Kind::files;
    rc.dataset.train_path =
        resolve(base_dir, get<std::string>(ds, "train", "dataset.train", ""));
    rc.dataset.test_path =
        resolve(base_dir, get<std::string>(ds, "test", "dataset.test", ""));
    if (rc.dataset.train_path.empty()) throw ConfigError("dataset.train", "is required");
    if (rc.dataset.test_path.empty()) throw ConfigError("dataset.test", "is required");
    for (const auto& [field, path] :
         {std::pair{"dataset.train", rc.dataset.train_path},
          std::pair{"dataset.test", rc.dataset.test_path}}) {
      if (!fs::exists(path)) throw ConfigError(field, "file not found: " + path);
    }
    const auto fmt = get<std::string>(ds, "format", "dataset.format", "tsv");
    if (fmt == "tsv") {
      rc.dataset.format = TextFormat::tsv;
    } else if (fmt == "csv") {
      rc.dataset.format = TextFormat::csv;
    } else {
      throw ConfigError("dataset.format", "must be tsv or csv");
    }
    rc.dataset.normalize = get<bool>(ds, "z_normalize", "dataset.z_normalize", true);
  } else {
    throw ConfigError("dataset.type", "must be synthetic or ucr");
  }

  // Model.
  const json md = j.value("model", json::object());
  reject_unknown(md, "model",
                 {"architecture", "hidden", "epochs", "batch_size",
                  "learning_rate", "optimizer"});
  const auto arch = get<std::string>(md, "architecture", "model.architecture", "cnn");
  const auto pa = parse_architecture(arch);
  if (!pa) throw ConfigError("model.architecture", "must be cnn or dense");
  pc.model.architecture = *pa;
  pc.model.hidden = get_count(md, "hidden", "model.hidden", pc.model.hidden);
  if (pc.model.hidden == 0) throw ConfigError("model.hidden", "must be >= 1");
  auto& tc = pc.model.train;
  tc.epochs = get_count(md, "epochs", "model.epochs", tc.epochs);
  if (tc.epochs < 1) throw ConfigError("model.epochs", "must be >= 1");
  tc.batch_size = get_count(md, "batch_size", "model.batch_size", tc.batch_size);
  if (tc.batch_size < 1) throw ConfigError("model.batch_size", "must be >= 1");
  tc.learning_rate =
      get<double>(md, "learning_rate", "model.learning_rate", tc.learning_rate);
  if (!(tc.learning_rate > 0.0)) throw ConfigError("model.learning_rate", "must be > 0");
  const auto opt = get<std::string>(md, "optimizer", "model.optimizer", "adam");
  const auto po = parse_optimizer(opt);
  if (!po) throw ConfigError("model.optimizer", "must be adam or sgd");
  tc.optimizer = *po;

  // Explainers.
  if (j.contains("explainers")) {
    const auto& ex = j.at("explainers");
    if (!ex.is_array()) throw ConfigError("explainers", "must be an array");
    pc.explainers.clear();
    std::set<std::string> names;
    for (std::size_t i = 0; i < ex.size(); ++i) {
      auto ne = parse_explainer(ex[i], i);
      if (!names.insert(ne.name).second) {
        throw ConfigError("explainers[" + std::to_string(i) + "].name",
                          "duplicate name '" + ne.name + "'");
      }
      pc.explainers.push_back(std::move(ne));
    }
  }

  // Perturbations.
  const json pj = j.value("perturbation", json::object());
  reject_unknown(pj, "perturbation",
                 {"strategies", "threshold_percentile", "subseq_len"});
  const double pct = get<double>(pj, "threshold_percentile",
                                 "perturbation.threshold_percentile", 90.0);
  if (!(pct > 0.0 && pct < 100.0)) {
    throw ConfigError("perturbation.threshold_percentile", "must lie in (0, 100)");
  }
  const std::size_t ns = get_count(pj, "subseq_len", "perturbation.subseq_len", 0);
  std::vector<Strategy> strategies(std::begin(kAllStrategies), std::end(kAllStrategies));
  if (pj.contains("strategies")) {
    strategies.clear();
    const auto& sj = pj.at("strategies");
    if (!sj.is_array()) throw ConfigError("perturbation.strategies", "must be an array");
    for (const auto& s : sj) {
      const auto name = s.is_string() ? s.get<std::string>() : s.dump();
      const auto st = parse_strategy(name);
      if (!st) {
        throw ConfigError("perturbation.strategies", "unknown strategy '" + name + "'");
      }
      if (std::find(strategies.begin(), strategies.end(), *st) != strategies.end()) {
        throw ConfigError("perturbation.strategies", "duplicate strategy '" + name + "'");
      }
      strategies.push_back(*st);
    }
  }
  pc.perturbations.clear();
  for (Strategy s : strategies) {
    PerturbationSpec p;
    p.strategy = s;
    p.threshold_percentile = pct;
    p.subseq_len = ns;
    pc.perturbations.push_back(p);
  }

  const auto mode = get<std::string>(j, "relevance_mode", "relevance_mode", "signed");
  const auto rm = parse_relevance_mode(mode);
  if (!rm) throw ConfigError("relevance_mode", "must be signed or absolute");
  pc.relevance_mode = *rm;
  pc.random_repeats = get_count(j, "random_repeats", "random_repeats", 1);
  if (pc.random_repeats < 1) throw ConfigError("random_repeats", "must be >= 1");
  rc.truth_oracle = get<bool>(j, "truth_oracle", "truth_oracle", false);
  if (rc.truth_oracle && rc.dataset.kind != DatasetSource::Kind::synthetic) {
    throw ConfigError("truth_oracle", "needs a synthetic dataset");
  }
  const auto hs = get<std::string>(j, "heatmap_scale", "heatmap_scale", "absolute");
  const auto phs = parse_heatmap_scale(hs);
  if (!phs) throw ConfigError("heatmap_scale", "must be absolute or signed");
  rc.heatmap_scale = *phs;

  // Plots: default is sample 0 for every explainer with the first strategy.
  if (j.contains("plots")) {
    const auto& pl = j.at("plots");
    if (!pl.is_array()) throw ConfigError("plots", "must be an array");
    for (std::size_t i = 0; i < pl.size(); ++i) {
      const std::string where = "plots[" + std::to_string(i) + "]";
      reject_unknown(pl[i], where, {"method", "sample", "strategy"});
      PlotRequest pr;
      pr.method = get<std::string>(pl[i], "method", where + ".method", "");
      pr.sample = get_count(pl[i], "sample", where + ".sample", 0);
      if (pl[i].contains("strategy") && !pl[i].at("strategy").is_null()) {
        const auto st = parse_strategy(
            get<std::string>(pl[i], "strategy", where + ".strategy", ""));
        if (!st) throw ConfigError(where + ".strategy", "unknown strategy");
        pr.strategy = *st;
      }
      rc.plots.push_back(std::move(pr));
    }
  } else {
    for (const auto& e : pc.explainers) {
      PlotRequest pr;
      pr.method = e.name;
      if (!strategies.empty()) pr.strategy = strategies.front();
      rc.plots.push_back(std::move(pr));
    }
  }
  for (std::size_t i = 0; i < rc.plots.size(); ++i) {
    const auto& pr = rc.plots[i];
    const bool known =
        std::any_of(pc.explainers.begin(), pc.explainers.end(),
                    [&](const auto& e) { return e.name == pr.method; }) ||
        (rc.truth_oracle && pr.method == "truth");
    if (!known) {
      throw ConfigError("plots[" + std::to_string(i) + "].method",
                        "'" + pr.method + "' is not a configured explainer");
    }
    if (pr.strategy && std::find(strategies.begin(), strategies.end(),
                                 *pr.strategy) == strategies.end()) {
      throw ConfigError("plots[" + std::to_string(i) + "].strategy",
                        "is not a configured strategy");
    }
  }

  // Output directory.
  std::string out = get<std::string>(j, "output_dir", "output_dir", "");
  if (out.empty()) {
    const char* root = std::getenv(kOutputRootEnv);
    out = (fs::path(root && *root ? root : ".") / ("tsxai-" + config_stem)).string();
  }
  rc.output_dir = fs::absolute(out).lexically_normal().string();
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  const fs::path p = fs::absolute(path);
  return parse_run_config(j, p.parent_path().string(), p.stem().string());
}

nlohmann::ordered_json effective_config_json(const RunConfig& rc) {
  nlohmann::ordered_json j;
  const auto& pc = rc.pipeline;
  j["seed"] = pc.seed;
  j["output_dir"] = rc.output_dir;
  j["threads"] = rc.threads;
  auto& ds = j["dataset"];
  if (rc.dataset.kind == DatasetSource::Kind::synthetic) {
    const auto& p = rc.dataset.planted;
    ds["type"] = "synthetic";
    ds["kind"] = std::string(to_string(p.kind));
    ds["n"] = p.n;
    ds["m"] = p.m;
    ds["window_len"] = p.window_len;
    ds["noise_std"] = p.noise_std;
    ds["seed"] = p.seed;
    ds["random_position"] = p.random_position;
  } else {
    ds["type"] = "ucr";
    ds["train"] = rc.dataset.train_path;
    ds["test"] = rc.dataset.test_path;
    ds["format"] = rc.dataset.format == TextFormat::tsv ? "tsv" : "csv";
    ds["z_normalize"] = rc.dataset.normalize;
  }
  auto& md = j["model"];
  md["architecture"] = std::string(to_string(pc.model.architecture));
  md["hidden"] = pc.model.hidden;
  md["epochs"] = pc.model.train.epochs;
  md["batch_size"] = pc.model.train.batch_size;
  md["learning_rate"] = pc.model.train.learning_rate;
  md["optimizer"] = std::string(to_string(pc.model.train.optimizer));
  auto& ex = j["explainers"] = nlohmann::ordered_json::array();
  for (const auto& e : pc.explainers) ex.push_back(to_json(e));
  auto& pj = j["perturbation"];
  auto& st = pj["strategies"] = nlohmann::ordered_json::array();
  for (const auto& p : pc.perturbations) st.push_back(std::string(to_string(p.strategy)));
  pj["threshold_percentile"] =
      pc.perturbations.empty() ? 90.0 : pc.perturbations.front().threshold_percentile;
  if (!pc.perturbations.empty() && pc.perturbations.front().subseq_len) {
    pj["subseq_len"] = pc.perturbations.front().subseq_len;
  } else {
    pj["subseq_len"] = nullptr;
  }
  j["relevance_mode"] = std::string(to_string(pc.relevance_mode));
  j["random_repeats"] = pc.random_repeats;
  j["truth_oracle"] = rc.truth_oracle;
  j["heatmap_scale"] = std::string(to_string(rc.heatmap_scale));
  auto& pl = j["plots"] = nlohmann::ordered_json::array();
  for (const auto& p : rc.plots) {
    nlohmann::ordered_json e;
    e["method"] = p.method;
    e["sample"] = p.sample;
    if (p.strategy) {
      e["strategy"] = std::string(to_string(*p.strategy));
    } else {
      e["strategy"] = nullptr;
    }
    pl.push_back(std::move(e));
  }
  return j;
}

}  // namespace tsxai
