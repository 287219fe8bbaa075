#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tsxai/error.hpp"
#include "tsxai/ndnet.hpp"

using namespace tsxai;

namespace {

Tensor eye(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

NetworkModel linear_model(std::vector<double> w) {
  const std::size_t m = w.size();
  return NetworkModel({m}, {Layer::dense(Tensor({1, m}, w), Tensor({1}, 0.0))});
}

}  // namespace

TEST_CASE("tensor construction checks the element count") {
  CHECK(Tensor({2, 3}).size() == 6);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK(shape_string({1, 96}) == "[1, 96]");
  CHECK(Tensor({2, 2}, {1, 2, 3, 4}).reshaped({4}).shape == Shape{4});
  CHECK_THROWS_AS(Tensor({4}).reshaped({3}), ShapeError);
  Tensor bad({2});
  bad[1] = std::nan("");
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("identity dense layer returns its input") {
  NetworkModel model({3}, {Layer::dense(eye(3), Tensor({3}))});
  const auto z = forward(model, Tensor::vector({1, 2, 3})).logits;
  CHECK(z.values == std::vector<double>{1, 2, 3});
}

TEST_CASE("relu clamps negatives") {
  NetworkModel model({3}, {Layer::dense(eye(3), Tensor({3})), Layer::relu()});
  const auto z = forward(model, Tensor::vector({-1, 0, 2})).logits;
  CHECK(z.values == std::vector<double>{0, 0, 2});
}

TEST_CASE("two-layer net matches hand arithmetic") {
  // h = relu(W1 x + b1), z = W2 h + b2 with x = (1, -2).
  // W1 x + b1 = (1*1 + 2*-2 + 0.5, -1*1 + 1*-2 + 0) = (-2.5, -3)... use other
  // numbers so one unit stays active:
  // W1 = [[2, 1], [1, -1]], b1 = (0.5, -1): (2 - 2 + 0.5, 1 + 2 - 1) = (0.5, 2)
  // W2 = [[1, 2], [-3, 0.5]], b2 = (0, 1): (0.5 + 4, -1.5 + 1 + 1) = (4.5, 0.5)
  NetworkModel model({2}, {Layer::dense(Tensor({2, 2}, {2, 1, 1, -1}), Tensor({2}, {0.5, -1})),
                           Layer::relu(),
                           Layer::dense(Tensor({2, 2}, {1, 2, -3, 0.5}), Tensor({2}, {0, 1}))});
  const auto res = forward(model, Tensor::vector({1, -2}));
  CHECK(res.logits.values[0] == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(res.logits.values[1] == doctest::Approx(0.5).epsilon(1e-15));
  REQUIRE(res.trace.layer_count() == 3);
  CHECK(res.trace.output(0).values == std::vector<double>{0.5, 2});
  CHECK(res.trace.output(0) == res.trace.input(1));
  CHECK(res.trace.output(1) == res.trace.input(2));
}

TEST_CASE("forward rejects a wrong input shape and names the layer") {
  NetworkModel model({3}, {Layer::dense(3, 2)});
  CHECK_THROWS_AS(forward(model, Tensor::vector({1, 2})), ShapeError);
  try {
    NetworkModel bad({4}, {Layer::dense(3, 2)});
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 0 (dense)") != std::string::npos);
  }
}

TEST_CASE("conv1d with a unit kernel is the identity") {
  NetworkModel model({1, 5}, {Layer::conv1d(Tensor({1, 1, 1}, {1.0}), Tensor({1})), Layer::flatten()});
  const std::vector<double> x{0.5, -1, 2, 3, -4};
  CHECK(forward_logits(model, x).values.size() == 5);
  CHECK(forward(model, model.input_tensor(x)).logits.values == x);
}

TEST_CASE("conv1d valid padding arithmetic") {
  // Kernel (1, 2, 1) over (1, 2, 3, 4): outputs 1+4+3 = 8 and 2+6+4 = 12.
  NetworkModel model({1, 4}, {Layer::conv1d(Tensor({1, 1, 3}, {1, 2, 1}), Tensor({1}, {0.5})),
                              Layer::flatten()});
  const auto z = forward_logits(model, std::vector<double>{1, 2, 3, 4});
  CHECK(z.values == std::vector<double>{8.5, 12.5});
  CHECK(Layer::conv1d(1, 3, 3).output_shape({1, 96}) == Shape{3, 94});
  CHECK(Layer::conv1d(1, 1, 2, 2).output_shape({1, 5}) == Shape{1, 2});
  CHECK_THROWS_AS(Layer::conv1d(1, 1, 3).output_shape({1, 2}), ShapeError);
  CHECK_THROWS_AS(Layer::conv1d(1, 1, 3, 0), InvalidArgument);
}

TEST_CASE("softmax is a distribution") {
  Rng rng(3);
  for (int c = 0; c < 200; ++c) {
    std::vector<double> z(2 + rng.below(6));
    for (double& v : z) v = rng.uniform(-50, 50);
    const auto p = softmax(z);
    double s = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("linear model gradient equals the weights") {
  const std::vector<double> w{0.5, -2, 3, 0.25};
  const auto model = linear_model(w);
  const auto res = forward(model, Tensor::vector({1, 1, 1, 1}));
  CHECK(backward_input(model, res.trace, 0).values == w);
  CHECK_THROWS_AS(backward_input(model, res.trace, 1), InvalidArgument);
}

TEST_CASE("zero weights past the input give a zero gradient") {
  NetworkModel model({4}, {Layer::dense(Tensor({3, 4}), Tensor({3}, {1, 1, 1})), Layer::relu(),
                           Layer::dense(3, 2)});
  const auto res = forward(model, Tensor::vector({1, -1, 2, 0}));
  for (double g : backward_input(model, res.trace, 1).values) CHECK(g == 0.0);
}

TEST_CASE("single dense layer, squared loss, hand gradient") {
  // z = W x + b, L = 0.5 * |z - y|^2, dL/dz = z - y.
  // W = [[1, 2], [0, -1]], b = (0, 1), x = (3, 1), y = (4, 0).
  // z = (5, 0), dL/dz = (1, 0): dW = [[3, 1], [0, 0]], db = (1, 0).
  NetworkModel model({2}, {Layer::dense(Tensor({2, 2}, {1, 2, 0, -1}), Tensor({2}, {0, 1}))});
  const auto res = forward(model, Tensor::vector({3, 1}));
  Tensor dz({2}, {res.logits[0] - 4.0, res.logits[1] - 0.0});
  const auto g = backward_params(model, res.trace, dz);
  REQUIRE(g.size() == 2);
  CHECK(g[0].values == std::vector<double>{3, 1, 0, 0});
  CHECK(g[1].values == std::vector<double>{1, 0});
  CHECK_THROWS_AS(backward_params(model, res.trace, Tensor({3})), ShapeError);
}

TEST_CASE("zero loss gradient gives zero parameter gradients") {
  Rng rng(5);
  const auto model = oracle::random_net(rng, 12, 3, true, true);
  const auto res = forward(model, model.input_tensor(oracle::random_series(rng, 12)));
  for (const auto& g : backward_params(model, res.trace, Tensor({2})))
    for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(11);
  const double h = 1e-4;
  int checked = 0;
  while (checked < 120) {
    const std::size_t m = 3 + rng.below(30);
    const auto model = oracle::random_net(rng, m, 1 + rng.below(3), rng.below(2) == 0, true);
    const auto x = oracle::random_series(rng, m);
    if (!oracle::stencil_is_smooth(model, x, h)) continue;
    const std::size_t cls = rng.below(2);
    const auto res = forward(model, model.input_tensor(x));
    const auto gi = backward_input(model, res.trace, cls);
    const auto fi = oracle::fd_input_gradient(model, x, cls, h);
    for (std::size_t i = 0; i < m; ++i) CHECK(oracle::relative_error(gi[i], fi[i]) < 1e-4);

    const std::vector<double> w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto gp = backward_params(model, res.trace, Tensor({2}, w));
    const auto fp = oracle::fd_param_gradient(model, x, w, h);
    std::size_t k = 0;
    for (const auto& t : gp)
      for (double v : t.values) CHECK(oracle::relative_error(v, fp[k++]) < 1e-4);
    CHECK(k == fp.size());
    ++checked;
  }
}

TEST_CASE("forward is bit-identical across calls") {
  Rng rng(2);
  const auto model = oracle::random_net(rng, 20, 3, true, true);
  const auto x = oracle::random_series(rng, 20);
  const auto a = forward_logits(model, x);
  for (int i = 0; i < 10; ++i) CHECK(forward_logits(model, x) == a);
}

TEST_CASE("initialisation is Glorot uniform and seeded") {
  NetworkModel a({10}, {Layer::dense(10, 6), Layer::relu(), Layer::dense(6, 2)}, 42);
  NetworkModel b({10}, {Layer::dense(10, 6), Layer::relu(), Layer::dense(6, 2)}, 42);
  CHECK(a == b);
  const double s = std::sqrt(6.0 / 16.0);
  for (double v : a.layers()[0].weight.values) CHECK(std::abs(v) <= s);
  for (double v : a.layers()[0].bias.values) CHECK(v == 0.0);
  b.initialize(43);
  CHECK_FALSE(a == b);
}

TEST_CASE("model needs a rank-1 output") {
  CHECK_THROWS_AS(NetworkModel({1, 8}, {Layer::conv1d(1, 2, 3)}), ShapeError);
  CHECK_THROWS_AS(NetworkModel({4}, {}), InvalidArgument);
}
