#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsxai/verification.hpp"

namespace tsxai {

// How relevance maps onto the white-to-red scale, per sample.
enum class HeatmapScale { absolute, signed_values };

std::string_view to_string(HeatmapScale s);
std::optional<HeatmapScale> parse_heatmap_scale(std::string_view s);

// Min-max normalised intensities in [0, 1]; a constant input maps to 0.
std::vector<double> heatmap_intensity(std::span<const double> relevance,
                                      HeatmapScale scale);

// Standalone SVG: one coloured band per time point under the series line,
// blue rectangles over `changes`, and a legend naming the scale.
std::string render_heatmap_svg(std::span<const double> series,
                               std::span<const double> relevance,
                               std::span<const IndexRange> changes,
                               HeatmapScale scale, const std::string& title);

}  // namespace tsxai
