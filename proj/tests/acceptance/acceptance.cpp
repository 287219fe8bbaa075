// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <unistd.h>

#include "oracles.hpp"
#include "tsxai/attribution.hpp"
#include "tsxai/cli.hpp"
#include "tsxai/config.hpp"
#include "tsxai/pipeline.hpp"
#include "tsxai/verification.hpp"

using namespace tsxai;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, double limit_s,
            const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream time;
  time.precision(2);
  time << std::fixed << s << " s";
  if (limit_s > 0 && s >= limit_s) {
    o.pass = false;
    o.detail += "; over the " + std::to_string(static_cast<int>(limit_s)) + " s budget";
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " ["
            << o.detail << "; " << time.str() << "]" << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Shared planted-spike fixture: the CLI defaults with seed 0.
RunConfig fixture_config(const fs::path& out) {
  nlohmann::json j = {{"seed", 0}, {"truth_oracle", true}, {"output_dir", out.string()}};
  return parse_run_config(j, ".", "acceptance");
}

struct Fixture {
  PlantedData data;
  PipelineRun run;
};

Fixture run_fixture() {
  const auto rc = fixture_config(fs::temp_directory_path());
  Fixture f;
  f.data = generate_planted(rc.dataset.planted);
  RelevanceRow truth{"truth", {}, false};
  for (const auto& mask : f.data.test_truth) truth.values.emplace_back(mask.begin(), mask.end());
  const std::vector<RelevanceRow> supplied{truth};
  f.run = run_pipeline(f.data.train, f.data.test, rc.pipeline, supplied);
  return f;
}

const ReportRow& row_of(const EvaluationReport& r, const std::string& name) {
  for (const auto& row : r.rows)
    if (row.method == name) return row;
  throw std::runtime_error("no report row " + name);
}

}  // namespace

int main() {
  std::cout << "acceptance: planted spike fixture n=200 m=96 window 8 noise 0.3 seed 0"
            << std::endl;

  report(1, "input and parameter gradients match central differences", 30, [] {
    Rng rng(20240601);
    const double h = 1e-4;
    int models = 0, skipped = 0, bad = 0;
    double worst = 0.0;
    while (models < 200) {
      const std::size_t m = 3 + rng.below(30);
      const auto model = oracle::random_net(rng, m, 1 + rng.below(3), rng.below(2) == 0, true);
      const auto x = oracle::random_series(rng, m);
      // A stencil crossing a ReLU kink has no central-difference limit.
      if (!oracle::stencil_is_smooth(model, x, h)) {
        ++skipped;
        continue;
      }
      const std::size_t cls = rng.below(2);
      const auto res = forward(model, model.input_tensor(x));
      const auto gi = backward_input(model, res.trace, cls);
      const auto fi = oracle::fd_input_gradient(model, x, cls, h);
      const std::vector<double> w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const auto gp = backward_params(model, res.trace, Tensor({2}, w));
      const auto fp = oracle::fd_param_gradient(model, x, w, h);
      double e = 0.0;
      for (std::size_t i = 0; i < m; ++i) e = std::max(e, oracle::relative_error(gi[i], fi[i]));
      std::size_t k = 0;
      for (const auto& t : gp)
        for (double v : t.values) e = std::max(e, oracle::relative_error(v, fp[k++]));
      worst = std::max(worst, e);
      bad += e >= 1e-4;
      ++models;
    }
    return Outcome{bad == 0, std::to_string(models) + " models, " + std::to_string(skipped) +
                                 " kink stencils skipped, max rel err " + fmt(worst)};
  });

  report(2, "exact KernelSHAP equals brute-force Shapley values", 60, [] {
    Rng rng(20240602);
    double worst = 0.0;
    const int models = 40;
    for (int c = 0; c < models; ++c) {
      const std::size_t m = 2 + rng.below(9);
      const auto model = oracle::random_net(rng, m, 1 + rng.below(3), rng.below(2) == 0, true);
      const auto x = oracle::random_series(rng, m);
      const auto bg = oracle::random_series(rng, m, 0.5);
      const std::size_t cls = rng.below(2);
      ShapConfig cfg;
      cfg.mode = ShapMode::exact;
      const auto r = kernel_shap(model, x, cls, cfg, bg);
      const auto phi = oracle::brute_force_shapley(oracle::model_game(model, x, bg, cls), m);
      for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, std::abs(r[i] - phi[i]));
    }
    return Outcome{worst <= 1e-6,
                   std::to_string(models) + " models, m <= 10, max abs err " + fmt(worst)};
  });

  report(3, "DeepLIFT summation-to-delta and LRP-0 conservation", 0, [] {
    Rng rng(20240603);
    const int cases = 200;
    double dl = 0.0, lrp = 0.0;
    for (int c = 0; c < cases; ++c) {
      const std::size_t m = 3 + rng.below(30);
      const auto model = oracle::random_net(rng, m, 1 + rng.below(3), rng.below(2) == 0, false);
      const auto x = oracle::random_series(rng, m);
      const auto ref = oracle::random_series(rng, m, 0.5);
      const std::size_t cls = rng.below(2);
      const double delta = oracle::logit_of(model, x, cls) - oracle::logit_of(model, ref, cls);
      dl = std::max(dl, std::abs(sum(deeplift_rescale(model, x, cls, ref)) - delta));
      lrp = std::max(lrp, std::abs(sum(lrp_epsilon(model, x, cls, 0.0)) -
                                   oracle::logit_of(model, x, cls)));
    }
    return Outcome{dl <= 1e-5 && lrp <= 1e-6, std::to_string(cases) +
                                                  " bias-free nets, DeepLIFT err " + fmt(dl) +
                                                  ", LRP err " + fmt(lrp)};
  });

  std::optional<Fixture> fixture;
  double fixture_s = 0.0;
  auto get_fixture = [&]() -> const Fixture& {
    if (!fixture) {
      const auto t0 = std::chrono::steady_clock::now();
      fixture = run_fixture();
      fixture_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return *fixture;
  };

  report(4, "end-to-end ordering assumption on planted spikes", 600, [&] {
    const auto& f = get_fixture();
    const auto& rep = f.run.report;
    Outcome o;
    o.pass = rep.base_accuracy >= 0.95;
    std::ostringstream d;
    d << "test accuracy " << fmt(rep.base_accuracy);
    int failed = 0, checked = 0;
    for (const auto& v : check_assumption(rep)) {
      if (v.method != "saliency" && v.method != "lrp" && v.method != "deeplift" &&
          v.method != "shap")
        continue;
      ++checked;
      if (!v.passed()) {
        ++failed;
        d << "; " << v.method << "/" << to_string(v.strategy) << " " << fmt(v.qm_original)
          << " >= " << fmt(v.qm_random) << " > " << fmt(v.qm_changed) << " fails";
      }
    }
    o.pass = o.pass && failed == 0 && checked == 24;
    double ratio = 0.0;
    for (std::size_t e = 1; e < f.run.history.size(); ++e)
      ratio = std::max(ratio, f.run.history[e].loss / f.run.history[e - 1].loss);
    d << "; " << checked - failed << "/" << checked << " cells hold; max epoch loss ratio "
      << fmt(ratio) << "; pipeline " << fmt(fixture_s) << " s";
    o.pass = o.pass && ratio <= 10.0;
    o.detail = d.str();
    return o;
  });

  report(5, "gradient methods concentrate relevance on the planted window", 0, [&] {
    const auto& f = get_fixture();
    const double uniform = 8.0 / 96.0;
    Outcome o;
    std::ostringstream d;
    d << "bar " << fmt(3 * uniform);
    for (const std::string name : {"saliency", "lrp", "deeplift"}) {
      const auto& rows = f.run.relevance;
      const auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const RelevanceRow& r) { return r.name == name; });
      double mass = 0.0;
      for (std::size_t i = 0; i < it->values.size(); ++i) {
        std::vector<double> a(it->values[i].size());
        std::transform(it->values[i].begin(), it->values[i].end(), a.begin(),
                       [](double v) { return std::abs(v); });
        const double total = sum(a);
        double on = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j)
          if (f.data.test_truth[i][j]) on += a[j];
        mass += total > 0 ? on / total : 0.0;
      }
      mass /= static_cast<double>(it->values.size());
      d << "; " << name << " " << fmt(mass);
      o.pass = o.pass && mass >= 3 * uniform;
    }
    o.detail = d.str();
    return o;
  });

  report(6, "perturbation algebra property tests", 0, [] {
    Rng rng(20240606);
    const int cases = 2000;
    int bad_local = 0, bad_swap = 0, bad_mean = 0, bad_inv = 0;
    auto series = [&](std::size_t m) {
      Series t(m);
      for (double& v : t) v = rng.uniform(-3, 3);
      return t;
    };
    auto subset = [&](std::size_t m) {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < m; ++i)
        if (rng.uniform() < 0.2) out.push_back(i);
      return out;
    };
    for (int c = 0; c < cases; ++c) {
      const std::size_t m = 1 + rng.below(80);
      const auto t = series(m);
      std::vector<double> r(m);
      for (double& v : r) v = rng.uniform();
      PerturbationSpec spec;
      spec.strategy = kAllStrategies[rng.below(6)];
      spec.threshold_percentile = rng.uniform(1, 99);
      spec.subseq_len = 1 + rng.below(8);
      for (const auto& p : {perturb_by_relevance(t, r, spec), random_control(t, r, spec, c)}) {
        for (std::size_t i = 0; i < m; ++i) {
          const bool changed = std::any_of(p.changed.begin(), p.changed.end(), [&](auto& g) {
            return i >= g.begin && i < g.end;
          });
          if (!changed && std::bit_cast<std::uint64_t>(p.values[i]) !=
                              std::bit_cast<std::uint64_t>(t[i]))
            ++bad_local;
        }
      }
      const auto starts = subset(m);
      const std::size_t ns = 1 + rng.below(8);
      bad_swap += perturb_swap(perturb_swap(t, starts, ns), starts, ns) != t;
      const auto once = perturb_mean(t, starts, ns);
      bad_mean += perturb_mean(once, starts, ns) != once;
      const double mx = *std::max_element(t.begin(), t.end());
      const auto back = perturb_inverse(perturb_inverse(t, starts, mx), starts, mx);
      for (std::size_t i = 0; i < m; ++i) bad_inv += std::abs(back[i] - t[i]) > 1e-12;
    }
    const int bad = bad_local + bad_swap + bad_mean + bad_inv;
    return Outcome{bad == 0, std::to_string(cases) +
                                 " cases each for locality, swap involution, mean "
                                 "idempotence, double inverse; violations " +
                                 std::to_string(bad)};
  });

  report(7, "report.csv layout and byte-identical rerun", 0, [&] {
    const auto& f = get_fixture();
    const auto dir = fs::temp_directory_path() / ("tsxai_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string csv[2];
    for (int k = 0; k < 2; ++k) {
      const auto cfg = dir / ("run" + std::to_string(k) + ".json");
      std::ofstream(cfg) << nlohmann::json{
          {"seed", 0}, {"truth_oracle", true}, {"output_dir", (dir / ("out" + std::to_string(k))).string()}};
      std::ostringstream out, err;
      if (cli::cmd_run(cfg.string(), {}, out, err) != cli::kOk)
        return Outcome{false, "run failed: " + err.str()};
      csv[k] = slurp(dir / ("out" + std::to_string(k)) / "report.csv");
    }
    fs::remove_all(dir);
    std::istringstream lines(csv[0]);
    std::vector<std::string> rows;
    for (std::string line; std::getline(lines, line);) rows.push_back(line.substr(0, line.find(',')));
    const std::string header = csv[0].substr(0, csv[0].find('\n'));
    const bool layout = header.rfind("CNN,Zero,Inverse,Swap,Mean", 0) == 0 &&
                        rows.size() == 8 && rows[1] == "saliency" && rows.back() == "Random";
    const bool same = csv[0] == csv[1];
    const bool matches = csv[0] == report_to_csv(f.run.report);
    return Outcome{layout && same && matches,
                   "header " + header + "; " + std::to_string(rows.size() - 1) +
                       " rows ending in " + rows.back() + "; rerun " +
                       (same ? "identical" : "differs") + "; CLI and library grids " +
                       (matches ? "agree" : "differ")};
  });

  report(8, "ground-truth relevance beats its random control", 0, [&] {
    const auto& f = get_fixture();
    const auto& rep = f.run.report;
    const auto& row = row_of(rep, "truth");
    Outcome o;
    std::ostringstream d;
    for (std::size_t j = 0; j < rep.strategies.size(); ++j) {
      const auto a = row.cells[j] ? row.cells[j]->normalized_change : std::nullopt;
      const auto b = row.random[j] ? row.random[j]->normalized_change : std::nullopt;
      const bool ok = a && b && *a > *b;
      o.pass = o.pass && ok;
      d << (j ? "; " : "") << to_string(rep.strategies[j]) << " "
        << (a ? fmt(*a) : "n/a") << " vs " << (b ? fmt(*b) : "n/a");
    }
    o.detail = d.str();
    return o;
  });

  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed"
                         : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
