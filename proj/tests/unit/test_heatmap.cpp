#include <regex>

#include "doctest.h"
#include "tsxai/heatmap.hpp"

using namespace tsxai;

namespace {

std::vector<std::string> band_fills(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re(R"re(<rect class="band"[^>]*fill="(#[0-9a-f]{6})")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

// Minimal well-formedness: tags balance and every attribute is quoted.
bool well_formed(const std::string& svg) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = svg.find('<', pos)) != std::string::npos) {
    const std::size_t end = svg.find('>', pos);
    if (end == std::string::npos) return false;
    std::string tag = svg.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.back() == '/';
    const std::string name = tag.substr(0, tag.find_first_of(" /"));
    if (std::count(tag.begin(), tag.end(), '"') % 2) return false;
    if (!self_closing) stack.push_back(name);
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("intensities are per-sample min-max") {
  CHECK(heatmap_intensity(std::vector<double>{1, 3, 2}, HeatmapScale::signed_values) ==
        std::vector<double>{0, 1, 0.5});
  CHECK(heatmap_intensity(std::vector<double>{-4, 0, 2}, HeatmapScale::absolute) ==
        std::vector<double>{1, 0, 0.5});
  CHECK(heatmap_intensity(std::vector<double>{2, 2, 2}, HeatmapScale::absolute) ==
        std::vector<double>{0, 0, 0});
}

TEST_CASE("uniform relevance gives a uniform band") {
  const std::vector<double> series{0, 1, 0, -1, 0, 1};
  const auto svg = render_heatmap_svg(series, std::vector<double>(6, 0.4), {},
                                      HeatmapScale::absolute, "uniform");
  const auto fills = band_fills(svg);
  REQUIRE(fills.size() == 6);
  CHECK(std::count(fills.begin(), fills.end(), fills[0]) == 6);
  CHECK(well_formed(svg));
}

TEST_CASE("a single maximum gives exactly one darkest cell") {
  std::vector<double> r(20, 0.1);
  r[7] = 5.0;
  const auto svg = render_heatmap_svg(std::vector<double>(20, 0.0), r, {},
                                      HeatmapScale::signed_values, "peak");
  const auto fills = band_fills(svg);
  REQUIRE(fills.size() == 20);
  CHECK(fills[7] == "#ff0000");
  CHECK(std::count(fills.begin(), fills.end(), "#ff0000") == 1);
  CHECK(svg.find("signed") != std::string::npos);
}

TEST_CASE("change ranges become rectangles and the file is well formed") {
  const std::vector<double> series{0.5, 1, 2, 1, 0.5, 0, -1, 3};
  const std::vector<IndexRange> changes{{1, 3}, {6, 8}};
  const auto svg = render_heatmap_svg(series, series, changes, HeatmapScale::absolute,
                                      "a <title> & \"quotes\"");
  CHECK(svg.rfind("<?xml", 0) == 0);
  std::size_t n = 0;
  for (std::size_t pos = 0; (pos = svg.find("class=\"change\"", pos)) != std::string::npos; ++pos) ++n;
  CHECK(n == 2);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("&lt;title&gt; &amp;") != std::string::npos);
  CHECK(well_formed(svg));
  CHECK(parse_heatmap_scale("abs") == HeatmapScale::absolute);
}
