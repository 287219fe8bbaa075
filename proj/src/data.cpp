#include "tsxai/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "tsxai/error.hpp"
#include "tsxai/rng.hpp"

namespace tsxai {

void Dataset::validate() const {
  if (class_count < 2) {
    throw InvalidArgument("dataset '" + name + "' needs at least 2 classes");
  }
  const std::size_t m = series_length();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.values.size() != m || m == 0) {
      throw InvalidArgument("dataset '" + name + "': sample " +
                            std::to_string(i) + " has length " +
                            std::to_string(s.values.size()) + ", expected " +
                            std::to_string(m));
    }
    if (s.label >= class_count) {
      throw InvalidArgument("dataset '" + name + "': sample " +
                            std::to_string(i) + " label out of range");
    }
    for (double v : s.values) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("dataset '" + name + "': sample " +
                              std::to_string(i) + " has a non-finite value");
      }
    }
  }
}

namespace {

double parse_field(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
    field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw IoError("line " + std::to_string(line_no) + ": non-numeric field '" +
                  std::string(field) + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset parse_ucr(const std::string& text, TextFormat format,
                  const std::string& name, const Dataset* label_source) {
  const char sep = format == TextFormat::tsv ? '\t' : ',';
  std::vector<std::pair<double, Series>> rows;
  std::vector<std::size_t> row_lines;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = line.find(sep, pos);
      fields.push_back(parse_field(
          std::string_view(line).substr(pos, next == std::string::npos
                                                 ? std::string::npos
                                                 : next - pos),
          line_no));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (fields.size() < 2) {
      throw IoError("line " + std::to_string(line_no) +
                    ": expected a label followed by at least one value");
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw IoError("line " + std::to_string(line_no) + ": ragged row with " +
                    std::to_string(fields.size() - 1) + " values, expected " +
                    std::to_string(width - 1));
    }
    rows.emplace_back(fields[0], Series(fields.begin() + 1, fields.end()));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw IoError(name + ": no samples");

  Dataset ds;
  ds.name = name;
  if (label_source) {
    ds.label_map = label_source->label_map;
  } else {
    std::vector<double> labels;
    for (const auto& r : rows) labels.push_back(r.first);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    ds.label_map = std::move(labels);
  }
  ds.class_count = ds.label_map.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto it = std::find(ds.label_map.begin(), ds.label_map.end(), rows[i].first);
    if (it == ds.label_map.end()) {
      throw IoError(name + ": line " + std::to_string(row_lines[i]) + ": label " +
                    format_double(rows[i].first) +
                    " is not present in the training label mapping");
    }
    ds.samples.push_back(
        {std::move(rows[i].second),
         static_cast<std::size_t>(it - ds.label_map.begin())});
  }
  if (ds.class_count < 2) {
    throw IoError(name + ": found a single class; need at least 2");
  }
  return ds;
}

Dataset load_ucr(const std::string& path, TextFormat format,
                 const Dataset* label_source) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_ucr(buf.str(), format, path, label_source);
  } catch (const IoError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw IoError(path + ": " + msg);
  }
}

Dataset load_ucr_tsv(const std::string& path, const Dataset* label_source) {
  return load_ucr(path, TextFormat::tsv, label_source);
}

std::string format_ucr(const Dataset& dataset, TextFormat format) {
  const char sep = format == TextFormat::tsv ? '\t' : ',';
  std::string out;
  for (const auto& s : dataset.samples) {
    const double label = s.label < dataset.label_map.size()
                             ? dataset.label_map[s.label]
                             : static_cast<double>(s.label);
    out += format_double(label);
    for (double v : s.values) {
      out += sep;
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_ucr(const Dataset& dataset, const std::string& path,
              TextFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_ucr(dataset, format);
  if (!out) throw IoError("failed to write " + path);
}

Series z_normalize(std::span<const double> series) {
  Series out(series.begin(), series.end());
  if (series.empty()) return out;
  const double n = static_cast<double>(series.size());
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd < 1e-12) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& v : out) v = (v - mean) / sd;
  return out;
}

Dataset z_normalize(const Dataset& dataset) {
  Dataset out = dataset;
  for (auto& s : out.samples) s.values = z_normalize(s.values);
  return out;
}

std::uint64_t fingerprint(const Dataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : format_ucr(dataset)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

double pattern_value(PlantedKind kind, std::size_t label, std::size_t offset,
                     std::size_t window_len) {
  const double L = static_cast<double>(window_len);
  const double j = static_cast<double>(offset);
  switch (kind) {
    case PlantedKind::spike: {
      if (label == 0) return 0.0;
      // Gaussian bump peaking at 3 on the middle sample of the window.
      const double centre = std::floor((L - 1.0) / 2.0);
      const double sigma = std::max(L / 6.0, 0.5);
      const double d = (j - centre) / sigma;
      return 3.0 * std::exp(-0.5 * d * d);
    }
    case PlantedKind::slope: {
      const double frac = window_len > 1 ? j / (L - 1.0) : 0.5;
      const double ramp = -1.5 + 3.0 * frac;
      return label == 1 ? ramp : -ramp;
    }
    case PlantedKind::flat_vs_sine:
      if (label == 0) return 0.0;
      return 1.5 * std::sin(2.0 * std::numbers::pi * j / L);
  }
  return 0.0;
}

void fill_split(const PlantedConfig& cfg, Split split, std::size_t fixed_start,
                Dataset& ds, std::vector<GroundTruthMask>& truth,
                std::vector<std::size_t>& starts) {
  const std::uint64_t split_id = split == Split::train ? 1 : 2;
  ds.class_count = 2;
  ds.label_map = {0.0, 1.0};
  ds.split = split;
  ds.name = std::string("planted-") + std::string(to_string(cfg.kind)) +
            (split == Split::train ? "-train" : "-test");
  const std::size_t positions = cfg.m - cfg.window_len + 1;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::size_t label = i % 2;
    std::size_t start = fixed_start;
    if (cfg.random_position) {
      Rng pos_rng(derive_seed(cfg.seed, split_id, i, 0x706f73));
      start = pos_rng.below(positions);
    }
    Rng noise(derive_seed(cfg.seed, split_id, i));
    Series v(cfg.m);
    for (double& x : v) x = cfg.noise_std * noise.normal();
    for (std::size_t j = 0; j < cfg.window_len; ++j) {
      v[start + j] += pattern_value(cfg.kind, label, j, cfg.window_len);
    }
    GroundTruthMask mask(cfg.m, false);
    std::fill(mask.begin() + static_cast<std::ptrdiff_t>(start),
              mask.begin() + static_cast<std::ptrdiff_t>(start + cfg.window_len),
              true);
    ds.samples.push_back({std::move(v), label});
    truth.push_back(std::move(mask));
    starts.push_back(start);
  }
}

}  // namespace

PlantedData generate_planted(const PlantedConfig& cfg) {
  if (cfg.window_len == 0) throw InvalidArgument("window_len must be >= 1");
  if (cfg.window_len >= cfg.m) {
    throw InvalidArgument("window_len " + std::to_string(cfg.window_len) +
                          " must be smaller than series length " +
                          std::to_string(cfg.m));
  }
  if (cfg.n == 0 || cfg.n % 2 != 0) {
    throw InvalidArgument("n must be a positive even number (balanced classes)");
  }
  if (!(cfg.noise_std >= 0.0) || !std::isfinite(cfg.noise_std)) {
    throw InvalidArgument("noise_std must be finite and >= 0");
  }
  PlantedData out;
  Rng pos(derive_seed(cfg.seed, "window"));
  const std::size_t fixed_start = pos.below(cfg.m - cfg.window_len + 1);
  fill_split(cfg, Split::train, fixed_start, out.train, out.train_truth,
             out.train_window_start);
  fill_split(cfg, Split::test, fixed_start, out.test, out.test_truth,
             out.test_window_start);
  return out;
}

std::string truth_sidecar_json(const PlantedConfig& cfg,
                               const std::vector<std::size_t>& window_starts) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(cfg.kind));
  j["m"] = cfg.m;
  j["n"] = window_starts.size();
  j["window_len"] = cfg.window_len;
  j["noise_std"] = cfg.noise_std;
  j["seed"] = cfg.seed;
  j["random_position"] = cfg.random_position;
  auto& w = j["windows"] = nlohmann::json::array();
  for (std::size_t s : window_starts) w.push_back({s, cfg.window_len});
  return j.dump(2) + "\n";
}

std::vector<GroundTruthMask> load_truth_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth sidecar " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    const auto m = j.at("m").get<std::size_t>();
    std::vector<GroundTruthMask> out;
    for (const auto& w : j.at("windows")) {
      const auto start = w.at(0).get<std::size_t>();
      const auto len = w.at(1).get<std::size_t>();
      if (len == 0 || start + len > m) throw IoError(path + ": window out of range");
      GroundTruthMask mask(m, false);
      for (std::size_t i = start; i < start + len; ++i) mask[i] = true;
      out.push_back(std::move(mask));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

double attribution_mass_on_truth(std::span<const double> relevance,
                                 const GroundTruthMask& mask) {
  if (relevance.size() != mask.size()) {
    throw ShapeError("relevance length " +
                          std::to_string(relevance.size()) +
                          " does not match mask length " +
                          std::to_string(mask.size()));
  }
  double inside = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    const double a = std::abs(relevance[i]);
    total += a;
    if (mask[i]) inside += a;
  }
  return total > 0.0 ? inside / total : 0.0;
}

std::string_view to_string(PlantedKind kind) {
  switch (kind) {
    case PlantedKind::spike:
      return "spike";
    case PlantedKind::slope:
      return "slope";
    case PlantedKind::flat_vs_sine:
      return "flat-vs-sine";
  }
  return "unknown";
}

std::optional<PlantedKind> parse_planted_kind(std::string_view s) {
  if (s == "spike") return PlantedKind::spike;
  if (s == "slope") return PlantedKind::slope;
  if (s == "flat-vs-sine" || s == "flat_vs_sine") return PlantedKind::flat_vs_sine;
  return std::nullopt;
}

}  // namespace tsxai
