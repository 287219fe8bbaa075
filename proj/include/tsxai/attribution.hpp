#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsxai/data.hpp"
#include "tsxai/kernels.hpp"
#include "tsxai/ndnet.hpp"

namespace tsxai {

enum class Method { saliency, lrp, deeplift, lime, shap };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

// One relevance score per time point of one sample.
struct RelevanceVector {
  std::vector<double> values;
  std::string method;
  std::size_t target_class = 0;
  std::size_t sample_index = 0;
};

struct LimeConfig {
  std::size_t num_samples = 1000;
  // Width of the exponential kernel; 0.75 * sqrt(m) when unset.
  std::optional<double> kernel_width;
  double mask_value = 0.0;
  double ridge = 1e-3;
  std::uint64_t seed = 0;
};

enum class ShapMode { automatic, exact, sampled };

struct ShapConfig {
  std::size_t num_coalitions = 2048;
  ShapMode mode = ShapMode::automatic;  // exact when m <= 12
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kShapAutoExactLimit = 12;
inline constexpr std::size_t kShapExactMax = 25;

// An XAI method plus its hyperparameters. `reference` is the DeepLIFT
// reference and the SHAP background; empty means all zeros.
struct Explainer {
  Method method = Method::saliency;
  double lrp_epsilon = 1e-6;
  LimeConfig lime;
  ShapConfig shap;
  std::vector<double> reference;
  std::optional<std::size_t> target_class;

  void validate() const;
};

// Scalar output of a black-box model on one input, used by the sampling
// methods.
using ValueFunction = std::function<double(std::span<const double>)>;

// |d logit_class / d t_i|.
std::vector<double> saliency(const NetworkModel& model,
                             std::span<const double> sample,
                             std::size_t target_class);

// Epsilon-stabilised layer-wise relevance propagation starting from the
// target logit. Dense, conv1d, relu and flatten layers only.
std::vector<double> lrp_epsilon(const NetworkModel& model,
                                std::span<const double> sample,
                                std::size_t target_class, double epsilon);

// DeepLIFT with the Rescale rule for ReLU and the linear rule elsewhere.
// Contributions sum to logit(sample) - logit(reference).
std::vector<double> deeplift_rescale(const NetworkModel& model,
                                     std::span<const double> sample,
                                     std::size_t target_class,
                                     std::span<const double> reference);

// Weighted ridge surrogate on random binary masks over time points.
std::vector<double> lime_surrogate(const ValueFunction& f,
                                   std::span<const double> sample,
                                   const LimeConfig& config,
                                   std::uint64_t stream_seed);
std::vector<double> lime_surrogate(const NetworkModel& model,
                                   std::span<const double> sample,
                                   std::size_t target_class,
                                   const LimeConfig& config,
                                   std::size_t sample_index = 0);

// Shapley-kernel weighted least squares with the efficiency constraint.
std::vector<double> kernel_shap(const ValueFunction& f,
                                std::span<const double> sample,
                                std::span<const double> background,
                                const ShapConfig& config,
                                std::uint64_t stream_seed);
std::vector<double> kernel_shap(const NetworkModel& model,
                                std::span<const double> sample,
                                std::size_t target_class,
                                const ShapConfig& config,
                                std::span<const double> background,
                                std::size_t sample_index = 0);

// Dispatches on explainer.method; targets the predicted class unless the
// explainer overrides it.
RelevanceVector explain(const Explainer& explainer, const NetworkModel& model,
                        std::span<const double> sample,
                        std::size_t sample_index = 0);

std::vector<RelevanceVector> explain_batch(const Explainer& explainer,
                                           const NetworkModel& model,
                                           const Dataset& data, Exec exec);

}  // namespace tsxai
