#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsxai/data.hpp"
#include "tsxai/heatmap.hpp"
#include "tsxai/pipeline.hpp"

namespace tsxai {

// Invalid configuration; names the offending field.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& field, const std::string& reason)
      : InvalidArgument(field + ": " + reason), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct DatasetSource {
  enum class Kind { synthetic, files };
  Kind kind = Kind::synthetic;
  PlantedConfig planted;
  std::string train_path;
  std::string test_path;
  TextFormat format = TextFormat::tsv;
  bool normalize = true;
};

struct PlotRequest {
  std::string method;
  std::size_t sample = 0;
  std::optional<Strategy> strategy;  // draws that strategy's change ranges
};

struct RunConfig {
  DatasetSource dataset;
  PipelineConfig pipeline;
  std::string output_dir;
  std::vector<PlotRequest> plots;
  bool truth_oracle = false;
  HeatmapScale heatmap_scale = HeatmapScale::absolute;
  int threads = 0;
};

inline constexpr const char* kOutputRootEnv = "TSXAI_OUTPUT_ROOT";

// Parses a run configuration; relative dataset paths resolve against
// `base_dir`. Every key is optional and unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir,
                           const std::string& config_stem = "run");
RunConfig load_run_config(const std::string& path);

// Fully resolved configuration; loading it back yields the same run.
nlohmann::ordered_json effective_config_json(const RunConfig& config);

PipelineConfig default_pipeline_config();

}  // namespace tsxai
