#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#include "tsxai/data.hpp"
#include "tsxai/ndnet.hpp"

namespace tsxai {

// Execution policy for the per-sample batch kernels. `serial` is the
// reference path the tests compare the OpenMP path against; both produce
// bit-identical results because every reduction happens in index order
// after the parallel section.
enum class Exec { serial, parallel };

void set_thread_count(int threads);  // <= 0 keeps the OpenMP default
int thread_count();

// Calls fn(i) for every i in [0, n). The first exception thrown by any
// iteration is rethrown after the loop.
template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

namespace kernels {

std::size_t predict(const NetworkModel& model, std::span<const double> series);
std::vector<std::size_t> predict_batch(const NetworkModel& model,
                                       const Dataset& data, Exec exec);
std::size_t count_correct(const NetworkModel& model, const Dataset& data,
                          Exec exec);

// Summed softmax cross-entropy gradients over `indices`, accumulated in
// index order.
struct BatchGradient {
  ParamGradients grads;
  double loss_sum = 0.0;
  std::size_t correct = 0;
};
BatchGradient batch_gradient(const NetworkModel& model, const Dataset& data,
                             std::span<const std::size_t> indices, Exec exec);

// Mean cross-entropy and accuracy over the whole set.
struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};
LossAccuracy loss_and_accuracy(const NetworkModel& model, const Dataset& data,
                               Exec exec);

}  // namespace kernels
}  // namespace tsxai
