#include "tsxai/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>

#include "tsxai/error.hpp"

namespace tsxai {

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

namespace kernels {
namespace {

struct SampleGradient {
  ParamGradients grads;
  double loss = 0.0;
  bool correct = false;
};

SampleGradient sample_gradient(const NetworkModel& model,
                               const TimeSeriesSample& s) {
  auto fr = forward(model, model.input_tensor(s.values));
  const auto probs = softmax(fr.logits.data());
  SampleGradient out;
  out.loss = -std::log(std::max(probs[s.label], 1e-300));
  out.correct = argmax(fr.logits.data()) == s.label;
  Tensor g(fr.logits.shape);
  for (std::size_t c = 0; c < probs.size(); ++c) {
    g[c] = probs[c] - (c == s.label ? 1.0 : 0.0);
  }
  out.grads = backward_params(model, fr.trace, g);
  return out;
}

}  // namespace

std::size_t predict(const NetworkModel& model, std::span<const double> series) {
  return argmax(forward_logits(model, series).data());
}

std::vector<std::size_t> predict_batch(const NetworkModel& model,
                                       const Dataset& data, Exec exec) {
  std::vector<std::size_t> out(data.size());
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      out[i] = predict(model, data.samples[i].values);
    }
    return out;
  }
  for_each_index(data.size(), exec, [&](std::size_t i) {
    out[i] = predict(model, data.samples[i].values);
  });
  return out;
}

std::size_t count_correct(const NetworkModel& model, const Dataset& data,
                          Exec exec) {
  const auto pred = predict_batch(model, data, exec);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == data.samples[i].label) ++correct;
  }
  return correct;
}

BatchGradient batch_gradient(const NetworkModel& model, const Dataset& data,
                             std::span<const std::size_t> indices, Exec exec) {
  for (std::size_t idx : indices) {
    if (idx >= data.size()) throw InvalidArgument("batch index out of range");
    if (data.samples[idx].label >= model.class_count()) {
      throw InvalidArgument("label " + std::to_string(data.samples[idx].label) +
                            " out of range for " +
                            std::to_string(model.class_count()) + " classes");
    }
  }
  std::vector<SampleGradient> per(indices.size());
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
      per[i] = sample_gradient(model, data.samples[indices[i]]);
    }
  } else {
    for_each_index(indices.size(), exec, [&](std::size_t i) {
      per[i] = sample_gradient(model, data.samples[indices[i]]);
    });
  }
  BatchGradient out;
  for (const Tensor* p : model.parameters()) out.grads.emplace_back(p->shape);
  for (const auto& s : per) {
    for (std::size_t t = 0; t < out.grads.size(); ++t) {
      auto& dst = out.grads[t].values;
      const auto& src = s.grads[t].values;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    out.loss_sum += s.loss;
    if (s.correct) ++out.correct;
  }
  return out;
}

LossAccuracy loss_and_accuracy(const NetworkModel& model, const Dataset& data,
                               Exec exec) {
  if (data.empty()) throw InvalidArgument("empty dataset");
  std::vector<double> loss(data.size());
  std::vector<char> hit(data.size());
  auto one = [&](std::size_t i) {
    const auto& s = data.samples[i];
    const Tensor logits = forward_logits(model, s.values);
    const auto probs = softmax(logits.data());
    loss[i] = -std::log(std::max(probs[s.label], 1e-300));
    hit[i] = argmax(logits.data()) == s.label;
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < data.size(); ++i) one(i);
  } else {
    for_each_index(data.size(), exec, one);
  }
  LossAccuracy out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.loss += loss[i];
    correct += hit[i] ? 1 : 0;
  }
  out.loss /= static_cast<double>(data.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return out;
}

}  // namespace kernels
}  // namespace tsxai
