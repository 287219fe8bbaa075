// Serial reference against the OpenMP path for the per-sample kernels.
// Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <numeric>

#include "tsxai/attribution.hpp"
#include "tsxai/data.hpp"
#include "tsxai/kernels.hpp"
#include "tsxai/pipeline.hpp"
#include "tsxai/verification.hpp"

using namespace tsxai;

namespace {

struct Setup {
  PlantedData data;
  NetworkModel model;
  std::vector<std::vector<double>> relevance;

  Setup() {
    PlantedConfig pc;
    data = generate_planted(pc);
    ModelConfig mc;
    model = build_model(mc, pc.m, 2, 1);
    Explainer e;
    for (const auto& r : explain_batch(e, model, data.test, Exec::parallel))
      relevance.push_back(r.values);
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void BM_predict_batch(benchmark::State& st) {
  const auto& s = setup();
  for (auto _ : st)
    benchmark::DoNotOptimize(kernels::predict_batch(s.model, s.data.test, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.data.test.size()));
}

void BM_batch_gradient(benchmark::State& st) {
  const auto& s = setup();
  std::vector<std::size_t> idx(s.data.train.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (auto _ : st)
    benchmark::DoNotOptimize(kernels::batch_gradient(s.model, s.data.train, idx, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(idx.size()));
}

void BM_explain_batch(benchmark::State& st) {
  const auto& s = setup();
  Explainer e;
  e.method = static_cast<Method>(st.range(1));
  e.lime.num_samples = 200;
  e.shap.num_coalitions = 200;
  for (auto _ : st) benchmark::DoNotOptimize(explain_batch(e, s.model, s.data.test, exec_of(st)));
  st.SetLabel(std::string(to_string(e.method)));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.data.test.size()));
}

void BM_apply_spec(benchmark::State& st) {
  const auto& s = setup();
  PerturbationSpec spec;
  spec.strategy = Strategy::mean;
  for (auto _ : st)
    benchmark::DoNotOptimize(apply_spec(s.data.test, std::span(s.relevance), spec, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.data.test.size()));
}

}  // namespace

BENCHMARK(BM_predict_batch)->Arg(0)->Arg(1);
BENCHMARK(BM_batch_gradient)->Arg(0)->Arg(1);
BENCHMARK(BM_explain_batch)
    ->ArgsProduct({{0, 1},
                   {static_cast<long>(Method::saliency), static_cast<long>(Method::lrp),
                    static_cast<long>(Method::deeplift), static_cast<long>(Method::lime),
                    static_cast<long>(Method::shap)}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_apply_spec)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
