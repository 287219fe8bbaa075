#include "tsxai/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tsxai/binary_io.hpp"
#include "tsxai/error.hpp"
#include "tsxai/heatmap.hpp"

namespace tsxai::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "unnamed" : out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed to write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct LoadedData {
  Dataset train;
  Dataset test;
  std::vector<GroundTruthMask> test_truth;
  std::vector<std::size_t> test_window_start;
};

LoadedData load_data(const RunConfig& rc) {
  LoadedData d;
  if (rc.dataset.kind == DatasetSource::Kind::synthetic) {
    auto p = generate_planted(rc.dataset.planted);
    d.train = std::move(p.train);
    d.test = std::move(p.test);
    d.test_truth = std::move(p.test_truth);
    d.test_window_start = std::move(p.test_window_start);
    return d;
  }
  d.train = load_ucr(rc.dataset.train_path, rc.dataset.format);
  d.train.split = Split::train;
  d.test = load_ucr(rc.dataset.test_path, rc.dataset.format, &d.train);
  d.test.split = Split::test;
  if (rc.dataset.normalize) {
    d.train = z_normalize(d.train);
    d.test = z_normalize(d.test);
  }
  d.train.validate();
  d.test.validate();
  if (d.train.series_length() != d.test.series_length()) {
    throw IoError("train and test series lengths differ");
  }
  return d;
}

std::uint64_t model_fingerprint(const NetworkModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : serialize_model(model)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string perturbed_stem(const PerturbedSet& p) {
  std::string s = safe_name(p.method) + "__" + std::string(to_string(p.strategy));
  if (p.random) s += "__random" + (p.repeat ? std::to_string(p.repeat) : "");
  return s;
}

void write_relevance(const fs::path& dir, const RelevanceRow& row,
                     const ojson& explainer_json, std::uint64_t seed,
                     const std::vector<std::size_t>& targets, std::size_t m) {
  const std::string stem = safe_name(row.name);
  std::vector<double> flat;
  flat.reserve(row.values.size() * m);
  for (const auto& r : row.values) flat.insert(flat.end(), r.begin(), r.end());
  binio::write_f64_file((dir / (stem + ".f64")).string(), flat);
  ojson man;
  man["method"] = row.name;
  man["explainer"] = explainer_json;
  man["seed"] = seed;
  man["n"] = row.values.size();
  man["m"] = m;
  man["matrix"] = stem + ".f64";
  man["dataset"] = "../data/test.tsv";
  man["in_random_row"] = row.in_random_row;
  man["target_classes"] = targets;
  write_text(dir / (stem + ".json"), man.dump(2) + "\n");
}

struct RelevanceMatrix {
  std::string method;
  std::size_t n = 0;
  std::size_t m = 0;
  bool in_random_row = true;
  std::vector<std::vector<double>> rows;
  fs::path dataset_path;
};

RelevanceMatrix read_relevance(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw IoError("missing artifact: " + manifest_path.string());
  }
  ojson man;
  try {
    man = ojson::parse(read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  RelevanceMatrix r;
  try {
    r.method = man.at("method").get<std::string>();
    r.n = man.at("n").get<std::size_t>();
    r.m = man.at("m").get<std::size_t>();
    r.in_random_row = man.value("in_random_row", true);
    const fs::path base = manifest_path.parent_path();
    r.dataset_path = base / man.at("dataset").get<std::string>();
    const fs::path matrix = base / man.at("matrix").get<std::string>();
    if (!fs::exists(matrix)) throw IoError("missing artifact: " + matrix.string());
    const auto flat = binio::read_f64_file(matrix.string());
    if (flat.size() != r.n * r.m || r.m == 0) {
      throw IoError(matrix.string() + ": corrupt matrix, expected " +
                    std::to_string(r.n) + " x " + std::to_string(r.m) +
                    " values, found " + std::to_string(flat.size()));
    }
    for (std::size_t i = 0; i < r.n; ++i) {
      r.rows.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i * r.m),
                          flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * r.m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  return r;
}

RunConfig load_config(const std::string& path, const Overrides& o) {
  RunConfig rc = load_run_config(path);
  apply_overrides(rc, o);
  return rc;
}

}  // namespace

void apply_overrides(RunConfig& rc, const Overrides& o) {
  auto& pc = rc.pipeline;
  // The dataset seed was already resolved from the file and stays put.
  if (o.seed) pc.seed = *o.seed;
  if (o.threshold_percentile) {
    if (!(*o.threshold_percentile > 0.0 && *o.threshold_percentile < 100.0)) {
      throw ConfigError("--threshold-percentile", "must lie in (0, 100)");
    }
    for (auto& p : pc.perturbations) p.threshold_percentile = *o.threshold_percentile;
  }
  if (o.subseq_len) {
    for (auto& p : pc.perturbations) p.subseq_len = *o.subseq_len;
  }
  if (o.output_dir) {
    rc.output_dir = fs::absolute(*o.output_dir).lexically_normal().string();
  }
  if (o.threads) rc.threads = *o.threads;
  if (o.relevance_mode) {
    const auto m = parse_relevance_mode(*o.relevance_mode);
    if (!m) throw ConfigError("--relevance-mode", "must be signed or absolute");
    pc.relevance_mode = *m;
  }
}

int cmd_run(const std::string& config_path, const Overrides& o,
            std::ostream& out, std::ostream& err) {
  RunConfig rc;
  LoadedData data;
  try {
    rc = load_config(config_path, o);
    data = load_data(rc);
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kValidationFailure;
  }
  set_thread_count(rc.threads);

  try {
    const fs::path dir(rc.output_dir);
    fs::create_directories(dir / "data");
    fs::create_directories(dir / "relevance");
    fs::create_directories(dir / "perturbed");
    fs::create_directories(dir / "plots");

    std::vector<RelevanceRow> supplied;
    if (rc.truth_oracle) {
      RelevanceRow truth{"truth", {}, false};
      for (const auto& mask : data.test_truth) {
        std::vector<double> r(mask.size());
        for (std::size_t i = 0; i < mask.size(); ++i) r[i] = mask[i] ? 1.0 : 0.0;
        truth.values.push_back(std::move(r));
      }
      supplied.push_back(std::move(truth));
    }

    out << "training " << to_string(rc.pipeline.model.architecture) << " on "
        << data.train.size() << " samples (m=" << data.train.series_length()
        << ", k=" << data.train.class_count << ")\n";
    const auto runres = run_pipeline(data.train, data.test, rc.pipeline, supplied);
    const auto& rep = runres.report;
    out << "base test accuracy " << rep.base_accuracy << "\n";

    write_text(dir / "effective_config.json",
               effective_config_json(rc).dump(2) + "\n");
    write_text(dir / "report.json", report_to_json(rep).dump(2) + "\n");
    write_text(dir / "report.csv", report_to_csv(rep));
    save_model(runres.model, (dir / "model.tsxnet").string());
    {
      std::string hist = "epoch,loss,accuracy\n";
      for (std::size_t e = 0; e < runres.history.size(); ++e) {
        std::ostringstream line;
        line.precision(17);
        line << e + 1 << ',' << runres.history[e].loss << ','
             << runres.history[e].accuracy << '\n';
        hist += line.str();
      }
      write_text(dir / "train_history.csv", hist);
    }
    save_ucr(data.train, (dir / "data" / "train.tsv").string());
    save_ucr(data.test, (dir / "data" / "test.tsv").string());
    if (rc.dataset.kind == DatasetSource::Kind::synthetic) {
      write_text(dir / "data" / "truth_test.json",
                 truth_sidecar_json(rc.dataset.planted, data.test_window_start));
    }

    const std::size_t m = data.test.series_length();
    for (std::size_t i = 0; i < runres.relevance.size(); ++i) {
      const auto& row = runres.relevance[i];
      std::vector<std::size_t> targets;
      ojson ej;
      if (i < rc.pipeline.explainers.size()) {
        ej = to_json(rc.pipeline.explainers[i]);
        for (const auto& r : runres.explanations[i]) targets.push_back(r.target_class);
      } else {
        ej = {{"source", "ground-truth mask"}};
        for (const auto& s : data.test.samples) targets.push_back(s.label);
      }
      write_relevance(dir / "relevance", row, ej, rc.pipeline.seed, targets, m);
    }
    for (const auto& p : runres.perturbed) {
      const std::string stem = perturbed_stem(p);
      save_ucr(p.data.data, (dir / "perturbed" / (stem + ".tsv")).string());
      write_text(dir / "perturbed" / (stem + ".changes.json"),
                 change_sidecar_json(p.data));
    }
    for (const auto& pr : rc.plots) {
      const auto it = std::find_if(runres.relevance.begin(), runres.relevance.end(),
                                   [&](const auto& r) { return r.name == pr.method; });
      if (it == runres.relevance.end() || pr.sample >= data.test.size()) {
        err << "skipping plot for " << pr.method << " sample " << pr.sample
            << ": not available\n";
        continue;
      }
      std::vector<IndexRange> changes;
      std::string suffix;
      if (pr.strategy) {
        for (const auto& p : runres.perturbed) {
          if (!p.random && p.method == pr.method && p.strategy == *pr.strategy) {
            changes = p.data.changes[pr.sample];
          }
        }
        suffix = "_" + std::string(to_string(*pr.strategy));
      }
      const std::string title = pr.method + " relevance, test sample " +
                                std::to_string(pr.sample);
      write_text(dir / "plots" /
                     (safe_name(pr.method) + "_sample" + std::to_string(pr.sample) +
                      suffix + ".svg"),
                 render_heatmap_svg(data.test.samples[pr.sample].values,
                                    it->values[pr.sample], changes,
                                    rc.heatmap_scale, title));
    }

    out << report_to_csv(rep);
    std::size_t failed = 0;
    for (const auto& v : check_assumption(rep)) failed += v.passed() ? 0 : 1;
    out << "ordering assumption: " << failed << " failing cell(s)\n";
    out << "artifacts written to " << dir.string() << "\n";
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

int cmd_verify(const std::string& config_path, const Overrides& o,
               std::ostream& out, std::ostream& err) {
  RunConfig rc;
  try {
    rc = load_config(config_path, o);
  } catch (const Error& e) {
    err << "invalid config: " << e.what() << "\n";
    return kValidationFailure;
  }
  set_thread_count(rc.threads);
  const fs::path dir(rc.output_dir);
  EvaluationReport stored;
  Dataset test;
  NetworkModel model;
  std::vector<RelevanceRow> rows;
  try {
    for (const fs::path& p : {dir / "report.json", dir / "model.tsxnet",
                             dir / "data" / "train.tsv", dir / "data" / "test.tsv"}) {
      if (!fs::exists(p)) throw IoError("missing artifact: " + p.string());
    }
    stored = report_from_json(ojson::parse(read_text(dir / "report.json")));
    const auto& md = stored.metadata;
    if (!md.contains("seed") || md.at("seed").get<std::uint64_t>() != rc.pipeline.seed) {
      throw FingerprintMismatch("artifacts were produced with seed " +
                                (md.contains("seed") ? md.at("seed").dump() : "?") +
                                ", config says " + std::to_string(rc.pipeline.seed));
    }
    const Dataset train = load_ucr_tsv((dir / "data" / "train.tsv").string());
    test = load_ucr_tsv((dir / "data" / "test.tsv").string(), &train);
    const std::string want_test = md.at("dataset").at("test_fingerprint").get<std::string>();
    if (hex64(fingerprint(test)) != want_test) {
      throw FingerprintMismatch("stored test set does not match the report fingerprint");
    }
    if (rc.dataset.kind == DatasetSource::Kind::synthetic) {
      const auto fresh = generate_planted(rc.dataset.planted);
      if (hex64(fingerprint(fresh.test)) != want_test) {
        throw FingerprintMismatch(
            "the configured dataset does not match the stored artifacts "
            "(dataset fingerprint " + hex64(fingerprint(fresh.test)) + " vs " +
            want_test + ")");
      }
    }
    model = load_model((dir / "model.tsxnet").string());
    if (hex64(model_fingerprint(model)) !=
        md.at("model").at("fingerprint").get<std::string>()) {
      throw FingerprintMismatch("stored model does not match the report fingerprint");
    }
    for (const auto& row : stored.rows) {
      auto rm = read_relevance(dir / "relevance" / (safe_name(row.method) + ".json"));
      if (rm.n != test.size() || rm.m != test.series_length()) {
        throw FingerprintMismatch("relevance for " + row.method +
                                  " does not match the stored test set");
      }
      rows.push_back({row.method, std::move(rm.rows), rm.in_random_row});
    }
  } catch (const FingerprintMismatch& e) {
    err << "fingerprint mismatch: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "cannot verify: " << e.what() << "\n";
    return kValidationFailure;
  }

  ScoredGrid grid;
  try {
    grid = score_relevance(model, test, rows, rc.pipeline, false);
  } catch (const std::exception& e) {
    err << "verification failed: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  if (report_to_csv(grid.report) != report_to_csv(stored)) {
    err << "fingerprint mismatch: recomputed grid differs from the stored report "
           "(perturbation settings changed?)\n";
    return kValidationFailure;
  }
  std::size_t failed = 0;
  for (const auto& v : check_assumption(grid.report)) {
    const bool ok = v.passed();
    out << (ok ? "PASS " : "FAIL ") << v.method << " / " << to_string(v.strategy)
        << ": qm(t)=" << v.qm_original << " qm(t_r)=" << v.qm_random
        << " qm(t_c)=" << v.qm_changed;
    if (!ok) {
      out << " [" << (v.original_ge_random ? "" : "qm(t) >= qm(t_r) violated")
          << (!v.original_ge_random && !v.random_gt_changed ? "; " : "")
          << (v.random_gt_changed ? "" : "qm(t_r) > qm(t_c) violated") << "]";
      ++failed;
    }
    out << "\n";
  }
  out << (failed ? std::to_string(failed) + " cell(s) failed\n"
                 : std::string("all cells passed\n"));
  return failed ? kRuntimeFailure : kOk;
}

int cmd_plot(const std::string& manifest_path, std::size_t sample_index,
             const std::string& out_svg,
             const std::optional<std::string>& changes_path,
             std::optional<HeatmapScale> scale, std::ostream& out,
             std::ostream& err) {
  std::string svg;
  try {
    const auto rm = read_relevance(manifest_path);
    if (sample_index >= rm.n) {
      throw InvalidArgument("sample index " + std::to_string(sample_index) +
                            " out of range (" + std::to_string(rm.n) + " samples)");
    }
    if (!fs::exists(rm.dataset_path)) {
      throw IoError("missing dataset " + rm.dataset_path.string());
    }
    const auto ds = load_ucr_tsv(rm.dataset_path.string());
    if (ds.size() != rm.n || ds.series_length() != rm.m) {
      throw IoError("dataset " + rm.dataset_path.string() +
                    " does not match the relevance matrix");
    }
    std::vector<IndexRange> changes;
    if (changes_path) {
      const auto all = load_change_sidecar(*changes_path);
      if (sample_index >= all.size()) {
        throw InvalidArgument("change sidecar has no entry for sample " +
                              std::to_string(sample_index));
      }
      changes = all[sample_index];
    }
    svg = render_heatmap_svg(ds.samples[sample_index].values,
                             rm.rows[sample_index], changes,
                             scale.value_or(HeatmapScale::absolute),
                             rm.method + " relevance, sample " +
                                 std::to_string(sample_index));
  } catch (const std::exception& e) {
    err << "plot: " << e.what() << "\n";
    return kValidationFailure;
  }
  try {
    write_text(out_svg, svg);
  } catch (const std::exception& e) {
    err << "plot: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  out << "wrote " << out_svg << "\n";
  return kOk;
}

int cmd_gen_data(const PlantedConfig& config, const std::string& out_dir,
                 std::ostream& out, std::ostream& err) {
  PlantedData d;
  try {
    d = generate_planted(config);
  } catch (const std::exception& e) {
    err << "gen-data: " << e.what() << "\n";
    return kValidationFailure;
  }
  try {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    save_ucr(d.train, (dir / "train.tsv").string());
    save_ucr(d.test, (dir / "test.tsv").string());
    write_text(dir / "truth_train.json", truth_sidecar_json(config, d.train_window_start));
    write_text(dir / "truth_test.json", truth_sidecar_json(config, d.test_window_start));
    out << "wrote " << d.train.size() << " train and " << d.test.size()
        << " test samples to " << dir.string() << "\n";
  } catch (const std::exception& e) {
    err << "gen-data: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

int main(int argc, char** argv) {
  CLI::App app{"tsxai: train time-series classifiers, explain them and verify "
               "the explanations by perturbation"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", o.seed, "override the run seed");
    sub->add_option("--threshold-percentile", o.threshold_percentile,
                    "override the relevance percentile threshold");
    sub->add_option("--subseq-len", o.subseq_len,
                    "override the sub-sequence length of the sequence strategies");
    sub->add_option("--output-dir", o.output_dir, "override the output directory");
    sub->add_option("--threads", o.threads, "worker threads (0 = OpenMP default)");
    sub->add_option("--relevance-mode", o.relevance_mode, "signed or absolute");
  };
  auto* run = app.add_subcommand("run", "train, explain, perturb and report");
  add_overrides(run);
  auto* verify = app.add_subcommand(
      "verify", "recheck the ordering assumption from stored artifacts");
  add_overrides(verify);

  auto* plot = app.add_subcommand("plot", "render a relevance heatmap as SVG");
  std::string manifest;
  std::size_t sample = 0;
  std::string out_svg;
  std::optional<std::string> changes;
  std::string scale_name = "absolute";
  plot->add_option("manifest", manifest, "relevance manifest (JSON)")->required();
  plot->add_option("sample", sample, "test sample index")->required();
  plot->add_option("out", out_svg, "output SVG path")->required();
  plot->add_option("--changes", changes, "perturbation change sidecar (JSON)");
  plot->add_option("--scale", scale_name, "absolute or signed");

  auto* gen = app.add_subcommand("gen-data", "write a planted synthetic dataset");
  PlantedConfig pcfg;
  std::string kind = "spike";
  std::string gen_out = ".";
  gen->add_option("--kind", kind, "spike, slope or flat-vs-sine");
  gen->add_option("--n", pcfg.n, "samples per split (even)");
  gen->add_option("--m", pcfg.m, "series length");
  gen->add_option("--window-len", pcfg.window_len, "planted window length");
  gen->add_option("--noise-std", pcfg.noise_std, "Gaussian noise standard deviation");
  gen->add_option("--seed", pcfg.seed, "generator seed");
  gen->add_flag("--random-position", pcfg.random_position,
                "draw the window position per sample");
  gen->add_option("--out", gen_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidationFailure;
  }

  if (run->parsed()) return cmd_run(config_path, o, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify(config_path, o, std::cout, std::cerr);
  if (plot->parsed()) {
    const auto sc = parse_heatmap_scale(scale_name);
    if (!sc) {
      std::cerr << "plot: --scale must be absolute or signed\n";
      return kValidationFailure;
    }
    return cmd_plot(manifest, sample, out_svg, changes, sc, std::cout, std::cerr);
  }
  if (gen->parsed()) {
    const auto k = parse_planted_kind(kind);
    if (!k) {
      std::cerr << "gen-data: --kind must be spike, slope or flat-vs-sine\n";
      return kValidationFailure;
    }
    pcfg.kind = *k;
    return cmd_gen_data(pcfg, gen_out, std::cout, std::cerr);
  }
  return kValidationFailure;
}

}  // namespace tsxai::cli
