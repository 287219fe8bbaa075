#include <cmath>

#include "doctest.h"
#include "tsxai/config.hpp"
#include "tsxai/error.hpp"
#include "tsxai/pipeline.hpp"

using namespace tsxai;

namespace {

PlantedData small_data() {
  PlantedConfig cfg;
  cfg.n = 40;
  cfg.m = 32;
  cfg.window_len = 4;
  cfg.seed = 11;
  return generate_planted(cfg);
}

PipelineConfig small_config() {
  PipelineConfig pc = default_pipeline_config();
  pc.seed = 3;
  pc.model.hidden = 16;
  pc.model.train.epochs = 15;
  for (auto& e : pc.explainers) {
    e.explainer.lime.num_samples = 60;
    e.explainer.shap.num_coalitions = 64;
  }
  return pc;
}

EvaluationReport report_with(double base, double random, double changed) {
  EvaluationReport r;
  r.base_accuracy = base;
  r.strategies = {Strategy::zero};
  Cell c{base, changed, normalized_change(base, changed), 1, 1};
  Cell rc{base, random, normalized_change(base, random), 1, 1};
  r.rows.push_back({"m", {c}, {rc}});
  r.random_row = {rc};
  return r;
}

}  // namespace

TEST_CASE("normalized change") {
  CHECK(*normalized_change(0.9, 0.45) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(*normalized_change(0.9, 0.9) == 0.0);
  CHECK(*normalized_change(0.8, 0.88) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK_FALSE(normalized_change(0.0, 0.3));
  CHECK_THROWS_AS(normalized_change(1.2, 0.3), InvalidArgument);
}

TEST_CASE("assumption verdicts") {
  auto v = judge("m", Strategy::zero, 0.9, 0.7, 0.3);
  CHECK(v.original_ge_random);
  CHECK(v.random_gt_changed);
  v = judge("m", Strategy::zero, 0.9, 0.3, 0.3);
  CHECK(v.original_ge_random);
  CHECK_FALSE(v.random_gt_changed);
  v = judge("m", Strategy::zero, 0.9, 0.95, 0.5);
  CHECK_FALSE(v.original_ge_random);
  CHECK(v.random_gt_changed);
  CHECK(judge("m", Strategy::zero, 0.9, 0.9 + 1e-13, 0.5).original_ge_random);

  const auto verdicts = check_assumption(report_with(0.9, 0.7, 0.3));
  REQUIRE(verdicts.size() == 1);
  CHECK(verdicts[0].passed());
  auto missing = report_with(0.9, 0.7, 0.3);
  missing.rows[0].random[0].reset();
  CHECK_THROWS_AS(check_assumption(missing), InvalidArgument);
}

TEST_CASE("aggregation over datasets") {
  auto a = report_with(1.0, 0.9, 0.8);
  auto b = report_with(1.0, 0.9, 0.6);
  const std::vector<EvaluationReport> one{a};
  const auto g1 = aggregate(one);
  CHECK(g1.rows == std::vector<std::string>{"m", "Random"});
  CHECK(*g1.mean[0][0] == doctest::Approx(0.2));
  const std::vector<EvaluationReport> two{a, b};
  const auto g2 = aggregate(two);
  CHECK(*g2.mean[0][0] == doctest::Approx(0.3));
  CHECK(g2.count[0][0] == 2);

  auto c = report_with(0.0, 0.0, 0.0);
  const std::vector<EvaluationReport> with_missing{a, c};
  const auto g3 = aggregate(with_missing);
  CHECK(*g3.mean[0][0] == doctest::Approx(0.2));
  CHECK(g3.count[0][0] == 1);

  auto d = a;
  d.strategies = {Strategy::mean};
  const std::vector<EvaluationReport> mismatched{a, d};
  CHECK_THROWS_AS(aggregate(mismatched), InvalidArgument);
}

TEST_CASE("pipeline end to end on a small planted set") {
  const auto p = small_data();
  const auto pc = small_config();
  const auto run = run_pipeline(p.train, p.test, pc);
  const auto& rep = run.report;
  CHECK(rep.strategies.size() == 6);
  CHECK(rep.rows.size() == 5);
  CHECK(rep.random_row.size() == 6);
  for (const auto& row : rep.rows) {
    REQUIRE(row.cells.size() == 6);
    for (std::size_t j = 0; j < 6; ++j) {
      REQUIRE(row.cells[j]);
      REQUIRE(row.random[j]);
      CHECK(row.cells[j]->base_accuracy == rep.base_accuracy);
      CHECK(row.cells[j]->normalized_change.has_value());
      CHECK(row.random[j]->selections == row.cells[j]->selections);
    }
  }
  CHECK(run.history.size() == 15);
  CHECK(run.explanations.size() == 5);
  CHECK(run.explanations[0].size() == p.test.size());

  // Deterministic and re-serialisable.
  const auto again = run_pipeline(p.train, p.test, pc);
  CHECK(report_to_json(again.report).dump() == report_to_json(rep).dump());
  CHECK(report_to_json(report_from_json(report_to_json(rep))).dump() == report_to_json(rep).dump());

  // Re-scoring stored relevance never touches the model.
  const auto before = serialize_model(run.model);
  const auto grid = score_relevance(run.model, p.test, run.relevance, pc, false);
  CHECK(serialize_model(run.model) == before);
  CHECK(report_to_csv(grid.report) == report_to_csv(rep));
}

TEST_CASE("serial and parallel pipelines produce the same report") {
  const auto p = small_data();
  auto pc = small_config();
  pc.model.train.epochs = 3;
  const auto a = run_pipeline(p.train, p.test, pc);
  pc.exec = Exec::serial;
  const auto b = run_pipeline(p.train, p.test, pc);
  CHECK(report_to_json(a.report).dump() == report_to_json(b.report).dump());
}

TEST_CASE("no perturbations gives a base-accuracy-only report") {
  const auto p = small_data();
  auto pc = small_config();
  pc.perturbations.clear();
  pc.model.train.epochs = 2;
  const auto run = run_pipeline(p.train, p.test, pc);
  CHECK(run.report.strategies.empty());
  CHECK(run.report.base_accuracy > 0.0);
  for (const auto& row : run.report.rows) CHECK(row.cells.empty());
  CHECK(check_assumption(run.report).empty());
  CHECK(report_to_csv(run.report).rfind("CNN\n", 0) == 0);
}

TEST_CASE("report CSV layout") {
  auto r = report_with(0.9, 0.7, 0.3);
  r.strategies = {Strategy::zero, Strategy::inverse};
  Cell c{0.9, 0.45, normalized_change(0.9, 0.45), 1, 1};
  r.rows[0].cells.push_back(c);
  r.rows[0].random.push_back(c);
  r.random_row.push_back(c);
  r.rows.push_back({"other", {c, std::nullopt}, {c, c}});
  CHECK(report_to_csv(r) ==
        "CNN,Zero,Inverse\n"
        "m,0.6667,0.5000\n"
        "other,0.5000,\n"
        "Random,0.2222,0.5000\n");
}

TEST_CASE("supplied rows and random-row membership") {
  const auto p = small_data();
  auto pc = small_config();
  pc.explainers.resize(1);
  pc.model.train.epochs = 5;
  RelevanceRow truth{"truth", {}, false};
  for (const auto& mask : p.test_truth) truth.values.emplace_back(mask.begin(), mask.end());
  const std::vector<RelevanceRow> supplied{truth};
  const auto run = run_pipeline(p.train, p.test, pc, supplied);
  REQUIRE(run.report.rows.size() == 2);
  CHECK(run.report.rows[1].method == "truth");
  // The Random row averages the saliency control only.
  for (std::size_t j = 0; j < 6; ++j)
    CHECK(run.report.random_row[j]->changed_accuracy ==
          run.report.rows[0].random[j]->changed_accuracy);

  RelevanceRow wrong{"bad", {{1.0, 2.0}}, true};
  const std::vector<RelevanceRow> bad{wrong};
  CHECK_THROWS_AS(run_pipeline(p.train, p.test, pc, bad), StageError);
}

TEST_CASE("config validation") {
  auto pc = small_config();
  pc.explainers.push_back(pc.explainers[0]);
  CHECK_THROWS_AS(pc.validate(), InvalidArgument);
  pc = small_config();
  pc.explainers[0].name = "Random";
  CHECK_THROWS_AS(pc.validate(), InvalidArgument);
  pc = small_config();
  pc.perturbations.push_back(pc.perturbations[0]);
  CHECK_THROWS_AS(pc.validate(), InvalidArgument);
  pc = small_config();
  pc.random_repeats = 0;
  CHECK_THROWS_AS(pc.validate(), InvalidArgument);
}

TEST_CASE("input errors and stage errors") {
  auto p = small_data();
  auto pc = small_config();
  auto bad_labels = p.train;
  bad_labels.samples[0].label = 9;
  CHECK_THROWS_AS(run_pipeline(bad_labels, p.test, pc), InvalidArgument);

  RelevanceRow wrong{"bad", {{1.0, 2.0}}, true};
  const std::vector<RelevanceRow> bad{wrong};
  pc.model.train.epochs = 1;
  try {
    run_pipeline(p.train, p.test, pc, bad);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == 3);
  }
}
