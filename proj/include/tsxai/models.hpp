#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tsxai/data.hpp"
#include "tsxai/kernels.hpp"
#include "tsxai/ndnet.hpp"

namespace tsxai {

// conv1d(1 -> 3 channels, kernel 3) -> relu -> flatten -> dense(hidden) ->
// relu -> dense(classes).
NetworkModel build_baseline_cnn(std::size_t input_length, std::size_t classes,
                                std::uint64_t seed = 0,
                                std::size_t hidden = 100);
// dense(hidden) -> relu -> dense(classes) on the raw series.
NetworkModel build_dense_mlp(std::size_t input_length, std::size_t classes,
                             std::uint64_t seed = 0, std::size_t hidden = 100);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct EpochStats {
  double loss = 0.0;      // mean cross-entropy on the training set after the epoch
  double accuracy = 0.0;  // training accuracy after the epoch
};

struct TrainResult {
  NetworkModel model;
  std::vector<EpochStats> history;
};

// Mini-batch training with softmax cross-entropy. Batches are drawn from a
// per-epoch shuffle seeded by config.seed.
TrainResult train(NetworkModel model, const Dataset& train_set,
                  const TrainConfig& config, Exec exec = Exec::parallel);

// Fraction of correctly predicted samples.
double evaluate(const NetworkModel& model, const Dataset& test_set,
                Exec exec = Exec::parallel);

std::string_view to_string(Optimizer o);
std::optional<Optimizer> parse_optimizer(std::string_view s);

}  // namespace tsxai
