#include "tsxai/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tsxai/error.hpp"

namespace tsxai {

std::string_view to_string(HeatmapScale s) {
  return s == HeatmapScale::absolute ? "absolute" : "signed";
}

std::optional<HeatmapScale> parse_heatmap_scale(std::string_view s) {
  if (s == "absolute" || s == "abs") return HeatmapScale::absolute;
  if (s == "signed") return HeatmapScale::signed_values;
  return std::nullopt;
}

std::vector<double> heatmap_intensity(std::span<const double> relevance,
                                      HeatmapScale scale) {
  std::vector<double> v(relevance.begin(), relevance.end());
  if (scale == HeatmapScale::absolute) {
    for (double& x : v) x = std::abs(x);
  }
  if (v.empty()) return v;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& x : v) x = range > 0.0 ? (x - min) / range : 0.0;
  return v;
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string red_scale(double a) {
  const int gb = static_cast<int>(std::lround(255.0 * (1.0 - a)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#ff%02x%02x", gb, gb);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_heatmap_svg(std::span<const double> series,
                               std::span<const double> relevance,
                               std::span<const IndexRange> changes,
                               HeatmapScale scale, const std::string& title) {
  if (series.size() != relevance.size() || series.empty()) {
    throw InvalidArgument("heatmap: series and relevance must be non-empty and "
                          "of equal length");
  }
  const double width = 800.0;
  const double left = 40.0;
  const double top = 30.0;
  const double plot_h = 220.0;
  const double cell_w = (width - 2 * left) / static_cast<double>(series.size());
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto y_of = [&](double v) {
    return top + plot_h - (v - lo) / (hi - lo) * plot_h;
  };
  const auto intensity = heatmap_intensity(relevance, scale);

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
       "\" height=\"310\" viewBox=\"0 0 " + num(width) + " 310\">\n";
  s += "<title>" + escape_xml(title) + "</title>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(width) +
       "\" height=\"310\" fill=\"#ffffff\"/>\n";
  s += "<g id=\"relevance\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    s += "<rect class=\"band\" x=\"" + num(left + cell_w * i) + "\" y=\"" +
         num(top) + "\" width=\"" + num(cell_w) + "\" height=\"" +
         num(plot_h) + "\" fill=\"" + red_scale(intensity[i]) + "\"/>\n";
  }
  s += "</g>\n<g id=\"changes\">\n";
  for (const auto& r : changes) {
    if (r.end <= r.begin || r.end > series.size()) continue;
    s += "<rect class=\"change\" x=\"" + num(left + cell_w * r.begin) +
         "\" y=\"" + num(top) + "\" width=\"" + num(cell_w * r.length()) +
         "\" height=\"" + num(plot_h) +
         "\" fill=\"none\" stroke=\"#1f4fd1\" stroke-width=\"2\"/>\n";
  }
  s += "</g>\n<polyline id=\"series\" fill=\"none\" stroke=\"#000000\" "
       "stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (i) s += ' ';
    s += num(left + cell_w * (i + 0.5)) + "," + num(y_of(series[i]));
  }
  s += "\"/>\n";
  const std::string legend =
      scale == HeatmapScale::absolute
          ? "relevance scale: per-sample min-max of |r| (white = min, red = max)"
          : "relevance scale: per-sample min-max of signed r (white = min, red "
            "= max)";
  s += "<text x=\"" + num(left) +
       "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" +
       escape_xml(title) + "</text>\n";
  s += "<text id=\"legend\" x=\"" + num(left) +
       "\" y=\"280\" font-family=\"sans-serif\" font-size=\"12\">" +
       escape_xml(legend) + "</text>\n";
  if (!changes.empty()) {
    s += "<text x=\"" + num(left) +
         "\" y=\"298\" font-family=\"sans-serif\" font-size=\"12\">"
         "blue rectangles: perturbed ranges</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace tsxai
