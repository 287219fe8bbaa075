#include "tsxai/verification.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "tsxai/error.hpp"
#include "tsxai/rng.hpp"

namespace tsxai {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::zero:
      return "zero";
    case Strategy::inverse:
      return "inverse";
    case Strategy::swap:
      return "swap";
    case Strategy::mean:
      return "mean";
    case Strategy::swap_zero:
      return "swap_zero";
    case Strategy::mean_zero:
      return "mean_zero";
  }
  return "unknown";
}

std::string_view display_name(Strategy s) {
  switch (s) {
    case Strategy::zero:
      return "Zero";
    case Strategy::inverse:
      return "Inverse";
    case Strategy::swap:
      return "Swap";
    case Strategy::mean:
      return "Mean";
    case Strategy::swap_zero:
      return "SwapZero";
    case Strategy::mean_zero:
      return "MeanZero";
  }
  return "Unknown";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (Strategy st : kAllStrategies) {
    if (s == to_string(st) || s == display_name(st)) return st;
  }
  if (s == "swap-zero") return Strategy::swap_zero;
  if (s == "mean-zero") return Strategy::mean_zero;
  return std::nullopt;
}

std::string_view to_string(RelevanceMode m) {
  return m == RelevanceMode::absolute ? "absolute" : "signed";
}

std::optional<RelevanceMode> parse_relevance_mode(std::string_view s) {
  if (s == "signed") return RelevanceMode::signed_values;
  if (s == "absolute" || s == "abs") return RelevanceMode::absolute;
  return std::nullopt;
}

bool is_sequence(Strategy s) {
  return s != Strategy::zero && s != Strategy::inverse;
}

std::size_t default_subseq_len(std::size_t m) {
  const auto five_percent =
      static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(m)));
  return std::max<std::size_t>(3, five_percent);
}

void PerturbationSpec::validate() const {
  if (!(threshold_percentile > 0.0 && threshold_percentile < 100.0)) {
    throw InvalidArgument("threshold percentile must lie in (0, 100), got " +
                          std::to_string(threshold_percentile));
  }
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw InvalidArgument("percentile of an empty vector");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw InvalidArgument("percentile must lie in [0, 100]");
  }
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || v[hi] == v[lo]) return v[lo];
  return v[lo] + frac * (v[hi] - v[lo]);
}

std::vector<std::size_t> threshold_select(std::span<const double> relevance,
                                          double p) {
  const double e = percentile(relevance, p);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (relevance[i] > e) out.push_back(i);
  }
  return out;
}

namespace {

void check_indices(std::span<const std::size_t> idx, std::size_t m) {
  for (std::size_t i : idx) {
    if (i >= m) {
      throw InvalidArgument("index " + std::to_string(i) +
                            " out of range for series of length " +
                            std::to_string(m));
    }
  }
}

std::vector<IndexRange> point_ranges(std::span<const std::size_t> idx) {
  std::vector<std::size_t> sorted(idx.begin(), idx.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<IndexRange> out;
  for (std::size_t i : sorted) {
    if (!out.empty() && out.back().end == i) {
      out.back().end = i + 1;
    } else {
      out.push_back({i, i + 1});
    }
  }
  return out;
}

// Mean that returns the common value exactly when the window is constant.
double window_mean(std::span<const double> w) {
  if (std::all_of(w.begin(), w.end(), [&](double v) { return v == w[0]; })) {
    return w[0];
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  return sum / static_cast<double>(w.size());
}

}  // namespace

Series perturb_zero(std::span<const double> t,
                    std::span<const std::size_t> indices) {
  check_indices(indices, t.size());
  Series out(t.begin(), t.end());
  for (std::size_t i : indices) out[i] = 0.0;
  return out;
}

Series perturb_inverse(std::span<const double> t,
                       std::span<const std::size_t> indices) {
  if (t.empty()) {
    check_indices(indices, 0);
    return {};
  }
  return perturb_inverse(t, indices, *std::max_element(t.begin(), t.end()));
}

Series perturb_inverse(std::span<const double> t,
                       std::span<const std::size_t> indices, double max_value) {
  check_indices(indices, t.size());
  Series out(t.begin(), t.end());
  std::vector<char> done(t.size(), 0);
  for (std::size_t i : indices) {
    if (done[i]) continue;
    done[i] = 1;
    out[i] = max_value - t[i];
  }
  return out;
}

std::vector<IndexRange> merge_windows(std::span<const std::size_t> starts,
                                      std::size_t n_s, std::size_t m) {
  if (n_s == 0) throw InvalidArgument("sub-sequence length must be >= 1");
  check_indices(starts, m);
  std::vector<std::size_t> sorted(starts.begin(), starts.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<IndexRange> out;
  for (std::size_t s : sorted) {
    const std::size_t e = std::min(m, s + n_s);
    if (!out.empty() && s <= out.back().end) {
      out.back().end = std::max(out.back().end, e);
    } else {
      out.push_back({s, e});
    }
  }
  return out;
}

Series perturb_swap(std::span<const double> t,
                    std::span<const std::size_t> starts, std::size_t n_s) {
  Series out(t.begin(), t.end());
  for (const IndexRange& r : merge_windows(starts, n_s, t.size())) {
    std::reverse(out.begin() + static_cast<std::ptrdiff_t>(r.begin),
                 out.begin() + static_cast<std::ptrdiff_t>(r.end));
  }
  return out;
}

Series perturb_mean(std::span<const double> t,
                    std::span<const std::size_t> starts, std::size_t n_s) {
  Series out(t.begin(), t.end());
  for (const IndexRange& r : merge_windows(starts, n_s, t.size())) {
    const double mu = window_mean(t.subspan(r.begin, r.length()));
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(r.begin),
              out.begin() + static_cast<std::ptrdiff_t>(r.end), mu);
  }
  return out;
}

Series perturb_subsequence_zero(std::span<const double> t,
                                std::span<const std::size_t> starts,
                                std::size_t n_s) {
  Series out(t.begin(), t.end());
  for (const IndexRange& r : merge_windows(starts, n_s, t.size())) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(r.begin),
              out.begin() + static_cast<std::ptrdiff_t>(r.end), 0.0);
  }
  return out;
}

std::size_t Perturbation::changed_points() const {
  std::size_t n = 0;
  for (const auto& r : changed) n += r.length();
  return n;
}

Perturbation perturb(std::span<const double> t,
                     std::span<const std::size_t> selected, Strategy strategy,
                     std::size_t n_s) {
  Perturbation p;
  p.selections = selected.size();
  switch (strategy) {
    case Strategy::zero:
      p.values = perturb_zero(t, selected);
      p.changed = point_ranges(selected);
      break;
    case Strategy::inverse:
      p.values = perturb_inverse(t, selected);
      p.changed = point_ranges(selected);
      break;
    case Strategy::swap:
      p.values = perturb_swap(t, selected, n_s);
      p.changed = merge_windows(selected, n_s, t.size());
      break;
    case Strategy::mean:
      p.values = perturb_mean(t, selected, n_s);
      p.changed = merge_windows(selected, n_s, t.size());
      break;
    case Strategy::swap_zero:
    case Strategy::mean_zero:
      p.values = perturb_subsequence_zero(t, selected, n_s);
      p.changed = merge_windows(selected, n_s, t.size());
      break;
  }
  return p;
}

namespace {

std::vector<double> thresholded_view(std::span<const double> relevance,
                                     RelevanceMode mode) {
  std::vector<double> r(relevance.begin(), relevance.end());
  if (mode == RelevanceMode::absolute) {
    for (double& v : r) v = std::abs(v);
  }
  return r;
}

}  // namespace

Perturbation perturb_by_relevance(std::span<const double> t,
                                  std::span<const double> relevance,
                                  const PerturbationSpec& spec) {
  spec.validate();
  if (relevance.size() != t.size()) {
    throw InvalidArgument("relevance length " +
                          std::to_string(relevance.size()) +
                          " does not match series length " +
                          std::to_string(t.size()));
  }
  const auto r = thresholded_view(relevance, spec.mode);
  const auto selected = threshold_select(r, spec.threshold_percentile);
  return perturb(t, selected, spec.strategy, spec.window_length(t.size()));
}

std::vector<double> random_relevance(std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> r(m);
  for (double& v : r) v = rng.uniform();
  return r;
}

std::vector<std::size_t> random_positions(std::size_t m, std::size_t count,
                                          std::uint64_t seed) {
  if (count > m) throw InvalidArgument("more positions requested than points");
  const auto r = random_relevance(m, seed);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

std::uint64_t control_seed(const PerturbationSpec& spec,
                           std::size_t sample_index) {
  return derive_seed(spec.seed, sample_index,
                     static_cast<std::uint64_t>(spec.strategy) + 1);
}

Perturbation random_control(std::span<const double> t,
                            std::span<const double> method_relevance,
                            const PerturbationSpec& spec,
                            std::size_t sample_index) {
  spec.validate();
  if (method_relevance.size() != t.size()) {
    throw InvalidArgument("relevance length does not match series length");
  }
  const auto r = thresholded_view(method_relevance, spec.mode);
  const std::size_t count =
      threshold_select(r, spec.threshold_percentile).size();
  const auto positions =
      random_positions(t.size(), count, control_seed(spec, sample_index));
  return perturb(t, positions, spec.strategy, spec.window_length(t.size()));
}

std::size_t PerturbedDataset::total_changed_points() const {
  std::size_t n = 0;
  for (const auto& c : changes) {
    for (const auto& r : c) n += r.length();
  }
  return n;
}

std::size_t PerturbedDataset::total_selections() const {
  return std::accumulate(selections.begin(), selections.end(), std::size_t{0});
}

PerturbedDataset apply_spec(const Dataset& dataset,
                            std::span<const std::vector<double>> relevances,
                            const PerturbationSpec& spec, Exec exec) {
  spec.validate();
  if (relevances.size() != dataset.size()) {
    throw InvalidArgument("got " + std::to_string(relevances.size()) +
                          " relevance vectors for " +
                          std::to_string(dataset.size()) + " samples");
  }
  PerturbedDataset out;
  out.data = dataset;
  out.spec = spec;
  out.changes.resize(dataset.size());
  out.selections.resize(dataset.size());
  auto one = [&](std::size_t i) {
    const auto& t = dataset.samples[i].values;
    Perturbation p = spec.source == RelevanceSource::method
                         ? perturb_by_relevance(t, relevances[i], spec)
                         : random_control(t, relevances[i], spec, i);
    out.data.samples[i].values = std::move(p.values);
    out.changes[i] = std::move(p.changed);
    out.selections[i] = p.selections;
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < dataset.size(); ++i) one(i);
  } else {
    for_each_index(dataset.size(), exec, one);
  }
  return out;
}

PerturbedDataset apply_spec(const Dataset& dataset,
                            std::span<const RelevanceVector> relevances,
                            const PerturbationSpec& spec, Exec exec) {
  std::vector<std::vector<double>> raw;
  raw.reserve(relevances.size());
  for (const auto& r : relevances) raw.push_back(r.values);
  return apply_spec(dataset, std::span<const std::vector<double>>(raw), spec,
                    exec);
}

std::string change_sidecar_json(const PerturbedDataset& perturbed) {
  nlohmann::json j;
  j["strategy"] = std::string(to_string(perturbed.spec.strategy));
  j["source"] =
      perturbed.spec.source == RelevanceSource::method ? "method" : "random";
  j["threshold_percentile"] = perturbed.spec.threshold_percentile;
  j["subseq_len"] = perturbed.spec.window_length(perturbed.data.series_length());
  auto& samples = j["samples"] = nlohmann::json::array();
  for (std::size_t i = 0; i < perturbed.changes.size(); ++i) {
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& r : perturbed.changes[i]) ranges.push_back({r.begin, r.end});
    samples.push_back({{"selections", perturbed.selections[i]},
                       {"ranges", std::move(ranges)}});
  }
  return j.dump(1) + "\n";
}

std::vector<std::vector<IndexRange>> load_change_sidecar(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open change sidecar " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    std::vector<std::vector<IndexRange>> out;
    for (const auto& s : j.at("samples")) {
      std::vector<IndexRange> ranges;
      for (const auto& r : s.at("ranges")) {
        ranges.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
      }
      out.push_back(std::move(ranges));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace tsxai
