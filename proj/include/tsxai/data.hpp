#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tsxai {

using Series = std::vector<double>;

struct TimeSeriesSample {
  Series values;
  std::size_t label = 0;

  friend bool operator==(const TimeSeriesSample&, const TimeSeriesSample&) =
      default;
};

enum class Split { train, test };

// Equal-length univariate series with contiguous labels 0..k-1.
// `label_map[i]` is the original label that was remapped to i.
struct Dataset {
  std::vector<TimeSeriesSample> samples;
  std::size_t class_count = 0;
  std::string name;
  Split split = Split::train;
  std::vector<double> label_map;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t series_length() const {
    return samples.empty() ? 0 : samples.front().values.size();
  }
  // Throws InvalidArgument when any invariant is broken.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class TextFormat { tsv, csv };

// Reads one sample per line, label first. When `label_source` is given its
// label map is reused and labels absent from it are rejected.
Dataset load_ucr(const std::string& path, TextFormat format = TextFormat::tsv,
                 const Dataset* label_source = nullptr);
Dataset load_ucr_tsv(const std::string& path,
                     const Dataset* label_source = nullptr);
Dataset parse_ucr(const std::string& text, TextFormat format,
                  const std::string& name,
                  const Dataset* label_source = nullptr);

// Writes original labels and values with round-trip precision.
std::string format_ucr(const Dataset& dataset,
                       TextFormat format = TextFormat::tsv);
void save_ucr(const Dataset& dataset, const std::string& path,
              TextFormat format = TextFormat::tsv);

// Per-series zero mean and unit population standard deviation; constant
// series become all zeros.
Series z_normalize(std::span<const double> series);
Dataset z_normalize(const Dataset& dataset);

// Stable 64-bit fingerprint of the dataset contents (FNV-1a over its TSV).
std::uint64_t fingerprint(const Dataset& dataset);

// Marks the planted discriminative region of one sample.
using GroundTruthMask = std::vector<bool>;

enum class PlantedKind { spike, slope, flat_vs_sine };

struct PlantedConfig {
  std::size_t n = 200;  // samples per split
  std::size_t m = 96;
  std::size_t window_len = 8;
  double noise_std = 0.3;
  std::uint64_t seed = 0;
  PlantedKind kind = PlantedKind::spike;
  bool random_position = false;  // per-sample window position
};

struct PlantedData {
  Dataset train;
  Dataset test;
  std::vector<GroundTruthMask> train_truth;
  std::vector<GroundTruthMask> test_truth;
  std::vector<std::size_t> train_window_start;
  std::vector<std::size_t> test_window_start;
};

// Two balanced classes whose label is determined only by the pattern inside
// a window of `window_len` points; everything else is i.i.d. Gaussian noise.
PlantedData generate_planted(const PlantedConfig& config);

// Sidecar JSON with the planted window of every sample.
std::string truth_sidecar_json(const PlantedConfig& config,
                               const std::vector<std::size_t>& window_starts);
std::vector<GroundTruthMask> load_truth_sidecar(const std::string& path);

// Share of absolute relevance that falls inside the mask (0 when all
// relevance is zero).
double attribution_mass_on_truth(std::span<const double> relevance,
                                 const GroundTruthMask& mask);

std::string_view to_string(PlantedKind kind);
std::optional<PlantedKind> parse_planted_kind(std::string_view s);

}  // namespace tsxai
