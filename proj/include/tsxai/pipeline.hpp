#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsxai/attribution.hpp"
#include "tsxai/data.hpp"
#include "tsxai/error.hpp"
#include "tsxai/models.hpp"
#include "tsxai/verification.hpp"

namespace tsxai {

enum class Architecture { cnn, dense };
enum class ReferenceKind { zeros, train_mean };

std::string_view to_string(Architecture a);
std::optional<Architecture> parse_architecture(std::string_view s);
std::string_view to_string(ReferenceKind r);
std::optional<ReferenceKind> parse_reference_kind(std::string_view s);

struct ModelConfig {
  Architecture architecture = Architecture::cnn;
  std::size_t hidden = 100;
  TrainConfig train;
};

// An explainer as configured for a run: its report row name plus how its
// DeepLIFT reference / SHAP background is chosen.
struct NamedExplainer {
  std::string name;
  Explainer explainer;
  ReferenceKind reference = ReferenceKind::zeros;
};

struct PipelineConfig {
  ModelConfig model;
  std::vector<NamedExplainer> explainers;
  std::vector<PerturbationSpec> perturbations;
  std::uint64_t seed = 0;
  RelevanceMode relevance_mode = RelevanceMode::signed_values;
  std::size_t random_repeats = 1;
  Exec exec = Exec::parallel;

  void validate() const;
};

// Relevance supplied from outside the explainers (e.g. a ground-truth mask),
// evaluated as an extra report row.
struct RelevanceRow {
  std::string name;
  std::vector<std::vector<double>> values;
  // Whether this row's random control feeds the averaged Random row.
  bool in_random_row = true;
};

struct Cell {
  double base_accuracy = 0.0;
  double changed_accuracy = 0.0;
  std::optional<double> normalized_change;
  std::size_t selections = 0;
  std::size_t changed_points = 0;
};

// One report row: cells[j] belongs to report.strategies[j]; random[j] is the
// matched random control for the same row and strategy.
struct ReportRow {
  std::string method;
  std::vector<std::optional<Cell>> cells;
  std::vector<std::optional<Cell>> random;
};

struct EvaluationReport {
  std::string model_name = "CNN";
  double base_accuracy = 0.0;
  std::vector<Strategy> strategies;
  std::vector<ReportRow> rows;
  // Mean of the rows' random controls per strategy.
  std::vector<std::optional<Cell>> random_row;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

struct AssumptionVerdict {
  std::string method;
  Strategy strategy = Strategy::zero;
  double qm_original = 0.0;
  double qm_random = 0.0;
  double qm_changed = 0.0;
  bool original_ge_random = false;
  bool random_gt_changed = false;

  bool passed() const { return original_ge_random && random_gt_changed; }
};

inline constexpr double kAssumptionTolerance = 1e-12;

// (base - changed) / base, or nullopt when base is 0.
std::optional<double> normalized_change(double base_acc, double changed_acc);

// qm(t) >= qm(t_r^c) > qm(t^c) for one triple.
AssumptionVerdict judge(std::string method, Strategy strategy, double original,
                        double random, double changed);
std::vector<AssumptionVerdict> check_assumption(const EvaluationReport& report);

struct AggregateGrid {
  std::vector<std::string> rows;  // methods followed by "Random"
  std::vector<Strategy> strategies;
  std::vector<std::vector<std::optional<double>>> mean;
  std::vector<std::vector<std::size_t>> count;
};
// Unweighted mean of normalized changes per cell over datasets.
AggregateGrid aggregate(std::span<const EvaluationReport> reports);

// Stages 2b and 3 given fixed relevance: builds every perturbed test set,
// rescores it and fills the grid. Shared by run and verify.
struct PerturbedSet {
  std::string method;
  Strategy strategy = Strategy::zero;
  bool random = false;
  std::size_t repeat = 0;
  PerturbedDataset data;
};

struct ScoredGrid {
  EvaluationReport report;
  std::vector<PerturbedSet> perturbed;
};

ScoredGrid score_relevance(const NetworkModel& model, const Dataset& test,
                           std::span<const RelevanceRow> rows,
                           const PipelineConfig& config, bool keep_perturbed);

struct PipelineRun {
  EvaluationReport report;
  NetworkModel model;
  std::vector<EpochStats> history;
  std::vector<RelevanceRow> relevance;
  std::vector<std::vector<RelevanceVector>> explanations;  // per explainer
  std::vector<PerturbedSet> perturbed;
};

// Thrown with the failing stage (1 = training, 2 = explanation and
// perturbation, 3 = re-scoring).
class StageError : public Error {
 public:
  StageError(int stage, const std::string& what);
  int stage() const { return stage_; }

 private:
  int stage_;
};

PipelineRun run_pipeline(const Dataset& train, const Dataset& test,
                         const PipelineConfig& config,
                         std::span<const RelevanceRow> supplied = {});

NetworkModel build_model(const ModelConfig& config, std::size_t input_length,
                         std::size_t classes, std::uint64_t seed);
std::vector<double> train_mean(const Dataset& train);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::ordered_json& j);
// Table layout: strategies as columns, methods as rows, Random last.
std::string report_to_csv(const EvaluationReport& report);

nlohmann::ordered_json to_json(const NamedExplainer& e);
nlohmann::ordered_json to_json(const PerturbationSpec& s);
nlohmann::ordered_json to_json(const ModelConfig& m);

std::string hex64(std::uint64_t v);

}  // namespace tsxai
