#include "tsxai/models.hpp"

#include <cmath>
#include <numeric>

#include "tsxai/error.hpp"
#include "tsxai/rng.hpp"

namespace tsxai {

NetworkModel build_baseline_cnn(std::size_t input_length, std::size_t classes,
                                std::uint64_t seed, std::size_t hidden) {
  constexpr std::size_t kKernel = 3;
  constexpr std::size_t kChannels = 3;
  if (input_length < kKernel) {
    throw InvalidArgument("input length " + std::to_string(input_length) +
                          " is shorter than the conv kernel size 3");
  }
  if (classes < 2) throw InvalidArgument("need at least 2 classes");
  const std::size_t conv_len = input_length - kKernel + 1;
  std::vector<Layer> layers{
      Layer::conv1d(1, kChannels, kKernel),
      Layer::relu(),
      Layer::flatten(),
      Layer::dense(kChannels * conv_len, hidden),
      Layer::relu(),
      Layer::dense(hidden, classes),
  };
  NetworkModel model({1, input_length}, std::move(layers), seed);
  model.initialize(seed);
  return model;
}

NetworkModel build_dense_mlp(std::size_t input_length, std::size_t classes,
                             std::uint64_t seed, std::size_t hidden) {
  if (input_length == 0) throw InvalidArgument("input length must be >= 1");
  if (classes < 2) throw InvalidArgument("need at least 2 classes");
  std::vector<Layer> layers{
      Layer::dense(input_length, hidden),
      Layer::relu(),
      Layer::dense(hidden, classes),
  };
  NetworkModel model({input_length}, std::move(layers), seed);
  model.initialize(seed);
  return model;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("adam betas must lie in [0, 1)");
  }
}

TrainResult train(NetworkModel model, const Dataset& train_set,
                  const TrainConfig& config, Exec exec) {
  config.validate();
  if (train_set.empty()) throw InvalidArgument("training set is empty");
  if (train_set.series_length() != model.input_length()) {
    throw ShapeError("training series length " +
                     std::to_string(train_set.series_length()) +
                     " does not match model input length " +
                     std::to_string(model.input_length()));
  }
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (train_set.samples[i].label >= model.class_count()) {
      throw InvalidArgument("sample " + std::to_string(i) + " label " +
                            std::to_string(train_set.samples[i].label) +
                            " out of range for " +
                            std::to_string(model.class_count()) + " classes");
    }
  }

  auto params = model.parameters();
  std::vector<Tensor> m1, m2;
  for (const Tensor* p : params) {
    m1.emplace_back(p->shape);
    m2.emplace_back(p->shape);
  }
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  std::size_t step = 0;
  TrainResult result;
  result.history.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::span<const std::size_t> batch(order.data() + begin, end - begin);
      auto bg = kernels::batch_gradient(model, train_set, batch, exec);
      const double scale = 1.0 / static_cast<double>(batch.size());
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t t = 0; t < params.size(); ++t) {
        auto& p = params[t]->values;
        const auto& g = bg.grads[t].values;
        if (config.optimizer == Optimizer::sgd) {
          for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] -= config.learning_rate * g[k] * scale;
          }
          continue;
        }
        auto& a = m1[t].values;
        auto& b = m2[t].values;
        for (std::size_t k = 0; k < p.size(); ++k) {
          const double gk = g[k] * scale;
          a[k] = config.beta1 * a[k] + (1.0 - config.beta1) * gk;
          b[k] = config.beta2 * b[k] + (1.0 - config.beta2) * gk * gk;
          p[k] -= config.learning_rate * (a[k] / c1) /
                  (std::sqrt(b[k] / c2) + config.adam_epsilon);
        }
      }
    }
    const auto la = kernels::loss_and_accuracy(model, train_set, exec);
    result.history.push_back({la.loss, la.accuracy});
  }
  result.model = std::move(model);
  return result;
}

double evaluate(const NetworkModel& model, const Dataset& test_set, Exec exec) {
  if (test_set.empty()) throw InvalidArgument("test set is empty");
  const std::size_t correct = kernels::count_correct(model, test_set, exec);
  return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

std::string_view to_string(Optimizer o) {
  return o == Optimizer::adam ? "adam" : "sgd";
}

std::optional<Optimizer> parse_optimizer(std::string_view s) {
  if (s == "adam") return Optimizer::adam;
  if (s == "sgd") return Optimizer::sgd;
  return std::nullopt;
}

}  // namespace tsxai
