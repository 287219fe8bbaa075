#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsxai/attribution.hpp"
#include "tsxai/data.hpp"
#include "tsxai/kernels.hpp"

namespace tsxai {

enum class Strategy { zero, inverse, swap, mean, swap_zero, mean_zero };
enum class RelevanceSource { method, random };
// Whether thresholds see raw signed relevance or its magnitude.
enum class RelevanceMode { signed_values, absolute };

inline constexpr Strategy kAllStrategies[] = {
    Strategy::zero, Strategy::inverse,   Strategy::swap,
    Strategy::mean, Strategy::swap_zero, Strategy::mean_zero};

std::string_view to_string(Strategy s);
// Column label as used in report tables ("Zero", "SwapZero", ...).
std::string_view display_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);
std::string_view to_string(RelevanceMode m);
std::optional<RelevanceMode> parse_relevance_mode(std::string_view s);
bool is_sequence(Strategy s);

// Sub-sequence length used when none is configured: max(3, round(0.05 m)).
std::size_t default_subseq_len(std::size_t m);

struct PerturbationSpec {
  Strategy strategy = Strategy::zero;
  double threshold_percentile = 90.0;
  std::size_t subseq_len = 0;  // 0 selects default_subseq_len(m)
  RelevanceSource source = RelevanceSource::method;
  RelevanceMode mode = RelevanceMode::signed_values;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t window_length(std::size_t m) const {
    return subseq_len ? subseq_len : default_subseq_len(m);
  }
};

// Half-open [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

// Linearly interpolated percentile, p in [0, 100].
double percentile(std::span<const double> values, double p);
// Ascending indices i with r_i strictly above the p-th percentile of r.
std::vector<std::size_t> threshold_select(std::span<const double> relevance,
                                          double p);

Series perturb_zero(std::span<const double> t,
                    std::span<const std::size_t> indices);
// t_i := max(t) - t_i, with max taken over the whole unmodified series.
Series perturb_inverse(std::span<const double> t,
                       std::span<const std::size_t> indices);
Series perturb_inverse(std::span<const double> t,
                       std::span<const std::size_t> indices, double max_value);

// Windows [s, s + n_s) clipped at m and merged into maximal runs.
std::vector<IndexRange> merge_windows(std::span<const std::size_t> starts,
                                      std::size_t n_s, std::size_t m);
Series perturb_swap(std::span<const double> t,
                    std::span<const std::size_t> starts, std::size_t n_s);
Series perturb_mean(std::span<const double> t,
                    std::span<const std::size_t> starts, std::size_t n_s);
Series perturb_subsequence_zero(std::span<const double> t,
                                std::span<const std::size_t> starts,
                                std::size_t n_s);

struct Perturbation {
  Series values;
  std::vector<IndexRange> changed;
  std::size_t selections = 0;  // selected points or window starts
  std::size_t changed_points() const;
};

// Applies `strategy` at the already-selected points (or window starts).
Perturbation perturb(std::span<const double> t,
                     std::span<const std::size_t> selected, Strategy strategy,
                     std::size_t n_s);
// Threshold selection on `relevance` followed by `perturb`.
Perturbation perturb_by_relevance(std::span<const double> t,
                                  std::span<const double> relevance,
                                  const PerturbationSpec& spec);

// Uniform random relevance in [0, 1).
std::vector<double> random_relevance(std::size_t m, std::uint64_t seed);
// `count` distinct positions: the largest entries of a random relevance.
std::vector<std::size_t> random_positions(std::size_t m, std::size_t count,
                                          std::uint64_t seed);
std::uint64_t control_seed(const PerturbationSpec& spec,
                           std::size_t sample_index);
// Changes as many points (or window starts) as the method relevance would,
// at random positions.
Perturbation random_control(std::span<const double> t,
                            std::span<const double> method_relevance,
                            const PerturbationSpec& spec,
                            std::size_t sample_index);

struct PerturbedDataset {
  Dataset data;
  std::vector<std::vector<IndexRange>> changes;
  std::vector<std::size_t> selections;
  PerturbationSpec spec;

  std::size_t total_changed_points() const;
  std::size_t total_selections() const;
};

PerturbedDataset apply_spec(const Dataset& dataset,
                            std::span<const std::vector<double>> relevances,
                            const PerturbationSpec& spec,
                            Exec exec = Exec::parallel);
PerturbedDataset apply_spec(const Dataset& dataset,
                            std::span<const RelevanceVector> relevances,
                            const PerturbationSpec& spec,
                            Exec exec = Exec::parallel);

// Change ranges per sample, for audit and heatmap rectangles.
std::string change_sidecar_json(const PerturbedDataset& perturbed);
std::vector<std::vector<IndexRange>> load_change_sidecar(const std::string& path);

}  // namespace tsxai
