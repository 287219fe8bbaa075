#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsxai/tensor.hpp"

namespace tsxai {

enum class LayerKind : std::uint8_t {
  dense = 1,
  conv1d = 2,
  relu = 3,
  flatten = 4,
  softmax = 5,
};

std::string_view to_string(LayerKind kind);

// One layer of a feed-forward network.
//
// Dense layers take a rank-1 input of `in_features` values and hold a weight
// of shape (out_features, in_features). Conv1d layers take (in_channels,
// length) and hold a kernel of shape (out_channels, in_channels,
// kernel_size); padding is "valid", so the output length is
// (length - kernel_size) / stride + 1.
struct Layer {
  LayerKind kind = LayerKind::relu;
  Tensor weight;
  Tensor bias;
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_size = 0;
  std::size_t stride = 1;

  static Layer dense(std::size_t in, std::size_t out);
  static Layer dense(Tensor weight, Tensor bias);
  static Layer conv1d(std::size_t in_channels, std::size_t out_channels,
                      std::size_t kernel_size, std::size_t stride = 1);
  static Layer conv1d(Tensor kernel, Tensor bias, std::size_t stride = 1);
  static Layer relu() {
    Layer l;
    l.kind = LayerKind::relu;
    return l;
  }
  static Layer flatten() {
    Layer l;
    l.kind = LayerKind::flatten;
    return l;
  }
  static Layer softmax() {
    Layer l;
    l.kind = LayerKind::softmax;
    return l;
  }

  bool has_params() const {
    return kind == LayerKind::dense || kind == LayerKind::conv1d;
  }
  // Throws ShapeError when `input` is not accepted by this layer.
  Shape output_shape(const Shape& input) const;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Ordered stack of layers with a declared input shape. The last layer emits
// one logit per class.
class NetworkModel {
 public:
  NetworkModel() = default;
  NetworkModel(Shape input_shape, std::vector<Layer> layers,
               std::uint64_t seed = 0);

  const Shape& input_shape() const { return input_shape_; }
  std::size_t input_length() const { return shape_size(input_shape_); }
  std::size_t class_count() const { return class_count_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t layer_count() const { return layers_.size(); }

  // Parameter tensors in layer order, weight before bias.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  // Uniform Glorot initialisation of every weight, zero biases.
  void initialize(std::uint64_t seed);

  // Wraps a flat series into a tensor of the model's input shape.
  Tensor input_tensor(std::span<const double> series) const;

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::size_t class_count_ = 0;
  std::uint64_t seed_ = 0;
};

// Activations at every layer boundary of one forward pass. activations[0] is
// the network input and activations[i + 1] the output of layer i.
struct ForwardTrace {
  std::vector<Tensor> activations;

  std::size_t layer_count() const {
    return activations.empty() ? 0 : activations.size() - 1;
  }
  const Tensor& input(std::size_t layer) const { return activations[layer]; }
  const Tensor& output(std::size_t layer) const {
    return activations[layer + 1];
  }
};

struct ForwardResult {
  Tensor logits;
  ForwardTrace trace;
};

using ParamGradients = std::vector<Tensor>;

struct Gradients {
  Tensor input;
  ParamGradients params;
};

ForwardResult forward(const NetworkModel& model, const Tensor& input);
// Forward pass without keeping intermediate activations.
Tensor forward_logits(const NetworkModel& model, const Tensor& input);
Tensor forward_logits(const NetworkModel& model,
                      std::span<const double> series);

// d(logit[output_selector]) / d(input).
Tensor backward_input(const NetworkModel& model, const ForwardTrace& trace,
                      std::size_t output_selector);
// Gradients of sum(loss_grad * logits) with respect to every parameter tensor.
ParamGradients backward_params(const NetworkModel& model,
                               const ForwardTrace& trace,
                               const Tensor& loss_grad);
// Both of the above in one reverse sweep.
Gradients backward(const NetworkModel& model, const ForwardTrace& trace,
                   const Tensor& output_grad, bool want_params = true);

// Input gradient of a single layer given the gradient at its output.
Tensor layer_input_gradient(const Layer& layer, const Tensor& input,
                            const Tensor& output, const Tensor& output_grad);

std::vector<double> softmax(std::span<const double> logits);
std::size_t argmax(std::span<const double> values);

// Versioned little-endian binary checkpoint.
void save_model(const NetworkModel& model, std::ostream& out);
void save_model(const NetworkModel& model, const std::string& path);
std::vector<std::uint8_t> serialize_model(const NetworkModel& model);
NetworkModel load_model(std::istream& in);
NetworkModel load_model(const std::string& path);

}  // namespace tsxai
