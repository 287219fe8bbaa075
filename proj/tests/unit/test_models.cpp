#include <cmath>

#include "doctest.h"
#include "tsxai/error.hpp"
#include "tsxai/models.hpp"
#include "tsxai/rng.hpp"

using namespace tsxai;

namespace {

// Class decided by the sign of the first point, with a clear margin.
Dataset separable(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.class_count = 2;
  d.label_map = {0, 1};
  for (std::size_t i = 0; i < n; ++i) {
    TimeSeriesSample s;
    s.label = i % 2;
    s.values.resize(m);
    for (double& v : s.values) v = 0.3 * rng.normal();
    s.values[0] = s.label ? 2.0 + rng.uniform() : -2.0 - rng.uniform();
    d.samples.push_back(std::move(s));
  }
  return d;
}

// Predicts class 0 for every input.
NetworkModel constant_model(std::size_t m) {
  return NetworkModel({m}, {Layer::dense(Tensor({2, m}), Tensor({2}, {1.0, 0.0}))});
}

}  // namespace

TEST_CASE("baseline CNN layout") {
  const auto model = build_baseline_cnn(96, 2);
  REQUIRE(model.layer_count() == 6);
  CHECK(model.layers()[0].kind == LayerKind::conv1d);
  CHECK(model.layers()[0].weight.shape == Shape{3, 1, 3});
  CHECK(model.layers()[3].weight.shape == Shape{100, 282});
  CHECK(model.layers()[5].weight.shape == Shape{2, 100});
  CHECK(model.class_count() == 2);
  CHECK(model.input_shape() == Shape{1, 96});

  const auto tiny = build_baseline_cnn(3, 2);
  CHECK(tiny.layers()[3].weight.shape == Shape{100, 3});
  CHECK_THROWS_AS(build_baseline_cnn(2, 2), InvalidArgument);
  CHECK_THROWS_AS(build_baseline_cnn(10, 1), InvalidArgument);
}

TEST_CASE("dense MLP layout") {
  const auto model = build_dense_mlp(20, 3, 0, 16);
  CHECK(model.layers()[0].weight.shape == Shape{16, 20});
  CHECK(model.class_count() == 3);
}

TEST_CASE("training reaches a separable set and is deterministic") {
  const auto data = separable(64, 12, 1);
  TrainConfig cfg;
  cfg.seed = 5;
  const auto a = train(build_baseline_cnn(12, 2, 3, 16), data, cfg);
  REQUIRE(a.history.size() == 50);
  for (const auto& e : a.history) CHECK(std::isfinite(e.loss));
  CHECK(a.history.back().accuracy >= 0.99);
  CHECK(evaluate(a.model, data) >= 0.99);
  const auto b = train(build_baseline_cnn(12, 2, 3, 16), data, cfg, Exec::serial);
  CHECK(serialize_model(a.model) == serialize_model(b.model));
  for (std::size_t e = 1; e < a.history.size(); ++e)
    CHECK(a.history[e].loss <= 10.0 * a.history[e - 1].loss);
}

TEST_CASE("sgd also trains") {
  const auto data = separable(64, 8, 2);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::sgd;
  cfg.learning_rate = 0.05;
  cfg.epochs = 30;
  const auto r = train(build_dense_mlp(8, 2, 1, 8), data, cfg);
  CHECK(r.history.back().accuracy >= 0.99);
}

TEST_CASE("training preconditions") {
  const auto data = separable(8, 6, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(build_dense_mlp(6, 2), data, cfg), InvalidArgument);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(build_dense_mlp(6, 2), data, cfg), InvalidArgument);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(build_dense_mlp(6, 2), data, cfg), InvalidArgument);
  cfg = {};
  CHECK_THROWS_AS(train(build_dense_mlp(6, 2), Dataset{}, cfg), InvalidArgument);
  auto bad = data;
  bad.samples[3].label = 7;
  CHECK_THROWS_AS(train(build_dense_mlp(6, 2), bad, cfg), InvalidArgument);
  CHECK_THROWS_AS(train(build_dense_mlp(5, 2), data, cfg), ShapeError);
}

TEST_CASE("evaluate counts correct predictions") {
  const auto data = separable(10, 4, 3);
  CHECK(evaluate(constant_model(4), data) == 0.5);
  CHECK_THROWS_AS(evaluate(constant_model(4), Dataset{}), InvalidArgument);

  // Perfect model: logit_1 - logit_0 = 10 * t_0.
  Tensor w({2, 4});
  w[0] = -5.0;
  w[4] = 5.0;
  NetworkModel perfect({4}, {Layer::dense(w, Tensor({2}))});
  CHECK(evaluate(perfect, data) == 1.0);

  // Three samples, constant model predicts 0, two labelled 0.
  Dataset three;
  three.class_count = 2;
  three.samples = {{{0, 0, 0, 0}, 0}, {{1, 1, 1, 1}, 0}, {{2, 2, 2, 2}, 1}};
  CHECK(std::abs(evaluate(constant_model(4), three) - 2.0 / 3.0) < 1e-12);
}

TEST_CASE("accuracy of a union is the weighted mean") {
  const auto a = separable(10, 4, 4);
  auto b = separable(6, 4, 5);
  for (auto& s : b.samples) s.values[0] = -s.values[0];  // all wrong for "perfect"
  Tensor w({2, 4});
  w[0] = -5.0;
  w[4] = 5.0;
  NetworkModel model({4}, {Layer::dense(w, Tensor({2}))});
  Dataset ab = a;
  ab.samples.insert(ab.samples.end(), b.samples.begin(), b.samples.end());
  const double expect = (10 * evaluate(model, a) + 6 * evaluate(model, b)) / 16.0;
  CHECK(std::abs(evaluate(model, ab) - expect) < 1e-12);
}
