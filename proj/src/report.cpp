#include <cstdio>

#include "tsxai/error.hpp"
#include "tsxai/pipeline.hpp"

namespace tsxai {

using ojson = nlohmann::ordered_json;

ojson to_json(const NamedExplainer& e) {
  ojson j;
  j["name"] = e.name;
  j["method"] = std::string(to_string(e.explainer.method));
  switch (e.explainer.method) {
    case Method::saliency:
      break;
    case Method::lrp:
      j["epsilon"] = e.explainer.lrp_epsilon;
      break;
    case Method::deeplift:
      j["reference"] = std::string(to_string(e.reference));
      break;
    case Method::lime:
      j["num_samples"] = e.explainer.lime.num_samples;
      if (e.explainer.lime.kernel_width) {
        j["kernel_width"] = *e.explainer.lime.kernel_width;
      } else {
        j["kernel_width"] = nullptr;
      }
      j["mask_value"] = e.explainer.lime.mask_value;
      j["ridge"] = e.explainer.lime.ridge;
      j["seed"] = e.explainer.lime.seed;
      break;
    case Method::shap: {
      j["num_coalitions"] = e.explainer.shap.num_coalitions;
      const ShapMode mode = e.explainer.shap.mode;
      j["mode"] = mode == ShapMode::exact     ? "exact"
                  : mode == ShapMode::sampled ? "sampled"
                                              : "auto";
      j["background"] = std::string(to_string(e.reference));
      j["seed"] = e.explainer.shap.seed;
      break;
    }
  }
  return j;
}

ojson to_json(const PerturbationSpec& s) {
  ojson j;
  j["strategy"] = std::string(to_string(s.strategy));
  j["threshold_percentile"] = s.threshold_percentile;
  if (s.subseq_len) {
    j["subseq_len"] = s.subseq_len;
  } else {
    j["subseq_len"] = nullptr;
  }
  return j;
}

ojson to_json(const ModelConfig& m) {
  ojson j;
  j["architecture"] = std::string(to_string(m.architecture));
  j["hidden"] = m.hidden;
  j["train"] = {{"epochs", m.train.epochs},
                {"batch_size", m.train.batch_size},
                {"learning_rate", m.train.learning_rate},
                {"optimizer", std::string(to_string(m.train.optimizer))}};
  return j;
}

namespace {

ojson cell_json(const std::optional<Cell>& c) {
  if (!c) return nullptr;
  ojson j;
  j["base_accuracy"] = c->base_accuracy;
  j["changed_accuracy"] = c->changed_accuracy;
  if (c->normalized_change) {
    j["normalized_change"] = *c->normalized_change;
  } else {
    j["normalized_change"] = nullptr;
  }
  j["selections"] = c->selections;
  j["changed_points"] = c->changed_points;
  return j;
}

std::optional<Cell> cell_from(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  Cell c;
  c.base_accuracy = j.at("base_accuracy").get<double>();
  c.changed_accuracy = j.at("changed_accuracy").get<double>();
  if (!j.at("normalized_change").is_null()) {
    c.normalized_change = j.at("normalized_change").get<double>();
  }
  c.selections = j.at("selections").get<std::size_t>();
  c.changed_points = j.at("changed_points").get<std::size_t>();
  return c;
}

ojson cells_json(const std::vector<Strategy>& strategies,
                 const std::vector<std::optional<Cell>>& cells) {
  ojson j = ojson::object();
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    j[std::string(to_string(strategies[k]))] =
        cell_json(k < cells.size() ? cells[k] : std::nullopt);
  }
  return j;
}

std::vector<std::optional<Cell>> cells_from(
    const std::vector<Strategy>& strategies, const ojson& j) {
  std::vector<std::optional<Cell>> out;
  for (Strategy s : strategies) {
    const std::string key(to_string(s));
    out.push_back(j.contains(key) ? cell_from(j.at(key)) : std::nullopt);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

ojson report_to_json(const EvaluationReport& report) {
  ojson j;
  j["model"] = report.model_name;
  j["base_accuracy"] = report.base_accuracy;
  auto& st = j["strategies"] = ojson::array();
  for (Strategy s : report.strategies) st.push_back(std::string(to_string(s)));
  auto& rows = j["rows"] = ojson::array();
  for (const auto& r : report.rows) {
    ojson row;
    row["method"] = r.method;
    row["cells"] = cells_json(report.strategies, r.cells);
    row["random"] = cells_json(report.strategies, r.random);
    rows.push_back(std::move(row));
  }
  j["random_row"] = cells_json(report.strategies, report.random_row);
  auto& verdicts = j["assumption"] = ojson::array();
  try {
    for (const auto& v : check_assumption(report)) {
      verdicts.push_back({{"method", v.method},
                          {"strategy", std::string(to_string(v.strategy))},
                          {"qm_original", v.qm_original},
                          {"qm_random", v.qm_random},
                          {"qm_changed", v.qm_changed},
                          {"original_ge_random", v.original_ge_random},
                          {"random_gt_changed", v.random_gt_changed},
                          {"passed", v.passed()}});
    }
  } catch (const InvalidArgument&) {
    j["assumption"] = nullptr;
  }
  j["metadata"] = report.metadata;
  return j;
}

EvaluationReport report_from_json(const ojson& j) {
  try {
    EvaluationReport r;
    r.model_name = j.at("model").get<std::string>();
    r.base_accuracy = j.at("base_accuracy").get<double>();
    for (const auto& s : j.at("strategies")) {
      const auto parsed = parse_strategy(s.get<std::string>());
      if (!parsed) throw IoError("report: unknown strategy " + s.dump());
      r.strategies.push_back(*parsed);
    }
    for (const auto& row : j.at("rows")) {
      ReportRow rr;
      rr.method = row.at("method").get<std::string>();
      rr.cells = cells_from(r.strategies, row.at("cells"));
      rr.random = cells_from(r.strategies, row.at("random"));
      r.rows.push_back(std::move(rr));
    }
    r.random_row = cells_from(r.strategies, j.at("random_row"));
    if (j.contains("metadata")) r.metadata = j.at("metadata");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
}

std::string report_to_csv(const EvaluationReport& report) {
  std::string out = report.model_name;
  for (Strategy s : report.strategies) {
    out += ',';
    out += display_name(s);
  }
  out += '\n';
  auto emit = [&](const std::string& name,
                  const std::vector<std::optional<Cell>>& cells) {
    out += name;
    for (std::size_t k = 0; k < report.strategies.size(); ++k) {
      out += ',';
      if (k < cells.size() && cells[k] && cells[k]->normalized_change) {
        out += fmt(*cells[k]->normalized_change);
      }
    }
    out += '\n';
  };
  for (const auto& r : report.rows) emit(r.method, r.cells);
  emit("Random", report.random_row);
  return out;
}

}  // namespace tsxai
