#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "tsxai/config.hpp"

namespace tsxai::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kValidationFailure = 2;

// Flag values that override config-file keys.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold_percentile;
  std::optional<std::size_t> subseq_len;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
  std::optional<std::string> relevance_mode;
};

void apply_overrides(RunConfig& config, const Overrides& o);

// Each command writes progress to `out`, problems to `err`, and returns an
// exit code.
int cmd_run(const std::string& config_path, const Overrides& o,
            std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& config_path, const Overrides& o,
               std::ostream& out, std::ostream& err);
int cmd_plot(const std::string& manifest_path, std::size_t sample_index,
             const std::string& out_svg,
             const std::optional<std::string>& changes_path,
             std::optional<HeatmapScale> scale, std::ostream& out,
             std::ostream& err);
int cmd_gen_data(const PlantedConfig& config, const std::string& out_dir,
                 std::ostream& out, std::ostream& err);

// Full command-line entry point.
int main(int argc, char** argv);

}  // namespace tsxai::cli
