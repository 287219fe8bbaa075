#include "tsxai/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "tsxai/error.hpp"
#include "tsxai/rng.hpp"

namespace tsxai {

std::string_view to_string(Architecture a) {
  return a == Architecture::cnn ? "cnn" : "dense";
}

std::optional<Architecture> parse_architecture(std::string_view s) {
  if (s == "cnn") return Architecture::cnn;
  if (s == "dense" || s == "mlp") return Architecture::dense;
  return std::nullopt;
}

std::string_view to_string(ReferenceKind r) {
  return r == ReferenceKind::zeros ? "zeros" : "train_mean";
}

std::optional<ReferenceKind> parse_reference_kind(std::string_view s) {
  if (s == "zeros" || s == "zero") return ReferenceKind::zeros;
  if (s == "train_mean" || s == "mean") return ReferenceKind::train_mean;
  return std::nullopt;
}

StageError::StageError(int stage, const std::string& what)
    : Error("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}

void PipelineConfig::validate() const {
  model.train.validate();
  if (model.hidden == 0) throw InvalidArgument("model.hidden must be >= 1");
  std::set<std::string> names;
  for (const auto& e : explainers) {
    if (e.name.empty()) throw InvalidArgument("explainer name must not be empty");
    if (e.name == "Random") {
      throw InvalidArgument("explainer name 'Random' is reserved");
    }
    if (!names.insert(e.name).second) {
      throw InvalidArgument("duplicate explainer name '" + e.name + "'");
    }
    e.explainer.validate();
  }
  std::set<Strategy> seen;
  for (const auto& p : perturbations) {
    p.validate();
    if (!seen.insert(p.strategy).second) {
      throw InvalidArgument("strategy '" + std::string(to_string(p.strategy)) +
                            "' listed twice");
    }
  }
  if (random_repeats < 1) throw InvalidArgument("random_repeats must be >= 1");
}

std::optional<double> normalized_change(double base_acc, double changed_acc) {
  if (!(base_acc >= 0.0 && base_acc <= 1.0) ||
      !(changed_acc >= 0.0 && changed_acc <= 1.0)) {
    throw InvalidArgument("accuracies must lie in [0, 1]");
  }
  if (base_acc == 0.0) return std::nullopt;
  return (base_acc - changed_acc) / base_acc;
}

AssumptionVerdict judge(std::string method, Strategy strategy, double original,
                        double random, double changed) {
  AssumptionVerdict v;
  v.method = std::move(method);
  v.strategy = strategy;
  v.qm_original = original;
  v.qm_random = random;
  v.qm_changed = changed;
  v.original_ge_random = original >= random - kAssumptionTolerance;
  v.random_gt_changed = random > changed + kAssumptionTolerance;
  return v;
}

std::vector<AssumptionVerdict> check_assumption(const EvaluationReport& report) {
  std::vector<AssumptionVerdict> out;
  for (const auto& row : report.rows) {
    for (std::size_t j = 0; j < report.strategies.size(); ++j) {
      const Strategy s = report.strategies[j];
      if (j >= row.cells.size() || j >= row.random.size() || !row.cells[j] ||
          !row.random[j]) {
        throw InvalidArgument("report is missing the paired cells for (" +
                              row.method + ", " + std::string(to_string(s)) +
                              ")");
      }
      out.push_back(judge(row.method, s, report.base_accuracy,
                          row.random[j]->changed_accuracy,
                          row.cells[j]->changed_accuracy));
    }
  }
  return out;
}

AggregateGrid aggregate(std::span<const EvaluationReport> reports) {
  if (reports.empty()) throw InvalidArgument("nothing to aggregate");
  AggregateGrid g;
  g.strategies = reports.front().strategies;
  for (const auto& row : reports.front().rows) g.rows.push_back(row.method);
  for (const auto& r : reports) {
    bool same = r.strategies == g.strategies && r.rows.size() == g.rows.size();
    for (std::size_t i = 0; same && i < r.rows.size(); ++i) {
      same = r.rows[i].method == g.rows[i];
    }
    if (!same) throw InvalidArgument("reports do not share method/strategy axes");
  }
  g.rows.push_back("Random");
  const std::size_t n_rows = g.rows.size();
  const std::size_t n_cols = g.strategies.size();
  std::vector<std::vector<double>> sum(n_rows, std::vector<double>(n_cols, 0.0));
  g.count.assign(n_rows, std::vector<std::size_t>(n_cols, 0));
  for (const auto& r : reports) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      for (std::size_t i = 0; i + 1 < n_rows; ++i) {
        const auto& c = j < r.rows[i].cells.size() ? r.rows[i].cells[j]
                                                   : std::optional<Cell>{};
        if (c && c->normalized_change) {
          sum[i][j] += *c->normalized_change;
          ++g.count[i][j];
        }
      }
      const auto& rc = j < r.random_row.size() ? r.random_row[j]
                                               : std::optional<Cell>{};
      if (rc && rc->normalized_change) {
        sum[n_rows - 1][j] += *rc->normalized_change;
        ++g.count[n_rows - 1][j];
      }
    }
  }
  g.mean.assign(n_rows, std::vector<std::optional<double>>(n_cols));
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (g.count[i][j]) {
        g.mean[i][j] = sum[i][j] / static_cast<double>(g.count[i][j]);
      }
    }
  }
  return g;
}

NetworkModel build_model(const ModelConfig& config, std::size_t input_length,
                         std::size_t classes, std::uint64_t seed) {
  if (config.architecture == Architecture::cnn) {
    return build_baseline_cnn(input_length, classes, seed, config.hidden);
  }
  return build_dense_mlp(input_length, classes, seed, config.hidden);
}

std::vector<double> train_mean(const Dataset& train) {
  std::vector<double> mean(train.series_length(), 0.0);
  for (const auto& s : train.samples) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.values[i];
  }
  for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(1, train.size()));
  return mean;
}

namespace {

Cell make_cell(double base, double changed, std::size_t selections,
               std::size_t points) {
  Cell c;
  c.base_accuracy = base;
  c.changed_accuracy = changed;
  c.normalized_change = normalized_change(base, changed);
  c.selections = selections;
  c.changed_points = points;
  return c;
}

}  // namespace

ScoredGrid score_relevance(const NetworkModel& model, const Dataset& test,
                           std::span<const RelevanceRow> rows,
                           const PipelineConfig& config, bool keep_perturbed) {
  ScoredGrid out;
  EvaluationReport& rep = out.report;
  rep.model_name = config.model.architecture == Architecture::cnn ? "CNN" : "Dense";
  rep.base_accuracy = evaluate(model, test, config.exec);
  for (const auto& p : config.perturbations) rep.strategies.push_back(p.strategy);
  const std::size_t n_cols = rep.strategies.size();

  std::vector<double> random_sum(n_cols, 0.0);
  std::size_t random_rows = 0;
  for (const auto& row : rows) {
    if (row.values.size() != test.size()) {
      throw InvalidArgument("relevance row '" + row.name + "' has " +
                            std::to_string(row.values.size()) +
                            " vectors for " + std::to_string(test.size()) +
                            " test samples");
    }
    ReportRow rr;
    rr.method = row.name;
    rr.cells.resize(n_cols);
    rr.random.resize(n_cols);
    for (std::size_t j = 0; j < n_cols; ++j) {
      PerturbationSpec spec = config.perturbations[j];
      spec.mode = config.relevance_mode;
      spec.source = RelevanceSource::method;
      auto pd = apply_spec(test, std::span<const std::vector<double>>(row.values),
                           spec, config.exec);
      const double acc = evaluate(model, pd.data, config.exec);
      rr.cells[j] = make_cell(rep.base_accuracy, acc, pd.total_selections(),
                              pd.total_changed_points());
      if (keep_perturbed) {
        out.perturbed.push_back({row.name, spec.strategy, false, 0, std::move(pd)});
      }

      double acc_sum = 0.0;
      std::size_t sel = 0;
      std::size_t pts = 0;
      for (std::size_t r = 0; r < config.random_repeats; ++r) {
        PerturbationSpec rs = spec;
        rs.source = RelevanceSource::random;
        rs.seed = derive_seed(derive_seed(config.seed, "control"), r);
        auto rpd = apply_spec(test,
                              std::span<const std::vector<double>>(row.values),
                              rs, config.exec);
        acc_sum += evaluate(model, rpd.data, config.exec);
        if (r == 0) {
          sel = rpd.total_selections();
          pts = rpd.total_changed_points();
        }
        if (keep_perturbed) {
          out.perturbed.push_back({row.name, spec.strategy, true, r, std::move(rpd)});
        }
      }
      const double racc = acc_sum / static_cast<double>(config.random_repeats);
      rr.random[j] = make_cell(rep.base_accuracy, racc, sel, pts);
    }
    if (row.in_random_row) {
      for (std::size_t j = 0; j < n_cols; ++j) {
        random_sum[j] += rr.random[j]->changed_accuracy;
      }
      ++random_rows;
    }
    rep.rows.push_back(std::move(rr));
  }
  rep.random_row.resize(n_cols);
  if (random_rows > 0) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      rep.random_row[j] =
          make_cell(rep.base_accuracy,
                    random_sum[j] / static_cast<double>(random_rows), 0, 0);
    }
  }
  return out;
}

PipelineRun run_pipeline(const Dataset& train, const Dataset& test,
                         const PipelineConfig& config,
                         std::span<const RelevanceRow> supplied) {
  config.validate();
  train.validate();
  test.validate();
  if (train.series_length() != test.series_length()) {
    throw InvalidArgument("train and test series lengths differ");
  }
  if (train.class_count != test.class_count) {
    throw InvalidArgument("train and test class counts differ");
  }
  const std::size_t m = train.series_length();
  PipelineRun run;

  // Stage 1: train and score on the untouched test split.
  try {
    NetworkModel model = build_model(config.model, m, train.class_count,
                                     derive_seed(config.seed, "model"));
    TrainConfig tc = config.model.train;
    tc.seed = derive_seed(config.seed, "shuffle");
    auto tr = tsxai::train(std::move(model), train, tc, config.exec);
    run.model = std::move(tr.model);
    run.history = std::move(tr.history);
  } catch (const Error& e) {
    throw StageError(1, e.what());
  }
  const NetworkModel& model = run.model;

  // Stage 2: explanations for every test sample.
  try {
    const std::vector<double> mean_ref = train_mean(train);
    for (std::size_t i = 0; i < config.explainers.size(); ++i) {
      const auto& ne = config.explainers[i];
      Explainer e = ne.explainer;
      e.lime.seed = derive_seed(config.seed, i + 1, e.lime.seed, 0x6c696d65);
      e.shap.seed = derive_seed(config.seed, i + 1, e.shap.seed, 0x73686170);
      if (ne.reference == ReferenceKind::train_mean) e.reference = mean_ref;
      auto exps = explain_batch(e, model, test, config.exec);
      RelevanceRow row{ne.name, {}, true};
      row.values.reserve(exps.size());
      for (const auto& r : exps) row.values.push_back(r.values);
      run.relevance.push_back(std::move(row));
      run.explanations.push_back(std::move(exps));
    }
    for (const auto& s : supplied) run.relevance.push_back(s);
  } catch (const Error& e) {
    throw StageError(2, e.what());
  }

  // Stages 2b and 3: perturb by relevance, rescore.
  try {
    auto grid = score_relevance(model, test, run.relevance, config, true);
    run.report = std::move(grid.report);
    run.perturbed = std::move(grid.perturbed);
  } catch (const Error& e) {
    throw StageError(3, e.what());
  }

  auto& md = run.report.metadata;
  md["seed"] = config.seed;
  md["dataset"] = {{"name", train.name},
                   {"series_length", m},
                   {"class_count", train.class_count},
                   {"train_size", train.size()},
                   {"test_size", test.size()},
                   {"train_fingerprint", hex64(fingerprint(train))},
                   {"test_fingerprint", hex64(fingerprint(test))}};
  md["model"] = to_json(config.model);
  {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : serialize_model(model)) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
    md["model"]["fingerprint"] = hex64(h);
  }
  if (!run.history.empty()) {
    md["model"]["final_train_loss"] = run.history.back().loss;
    md["model"]["final_train_accuracy"] = run.history.back().accuracy;
  }
  auto& ex = md["explainers"] = nlohmann::ordered_json::array();
  for (const auto& e : config.explainers) ex.push_back(to_json(e));
  auto& ps = md["perturbations"] = nlohmann::ordered_json::array();
  for (const auto& p : config.perturbations) ps.push_back(to_json(p));
  md["relevance_mode"] = std::string(to_string(config.relevance_mode));
  md["random_repeats"] = config.random_repeats;
  md["target"] = "predicted class logit";
  md["normalized_change"] = "(base_accuracy - changed_accuracy) / base_accuracy";
  md["random_row"] = "mean of the per-method matched random controls";
  return run;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace tsxai
