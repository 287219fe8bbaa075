#include "tsxai/ndnet.hpp"

#include <algorithm>
#include <cmath>

#include "tsxai/error.hpp"
#include "tsxai/rng.hpp"

namespace tsxai {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense:
      return "dense";
    case LayerKind::conv1d:
      return "conv1d";
    case LayerKind::relu:
      return "relu";
    case LayerKind::flatten:
      return "flatten";
    case LayerKind::softmax:
      return "softmax";
  }
  return "unknown";
}

Layer Layer::dense(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw InvalidArgument("dense layer needs in, out >= 1");
  Layer l;
  l.kind = LayerKind::dense;
  l.in_features = in;
  l.out_features = out;
  l.weight = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

Layer Layer::dense(Tensor weight, Tensor bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    throw ShapeError("dense layer: weight " + shape_string(weight.shape) +
                     " and bias " + shape_string(bias.shape) +
                     " are not (out, in) and (out)");
  }
  Layer l;
  l.kind = LayerKind::dense;
  l.out_features = weight.dim(0);
  l.in_features = weight.dim(1);
  l.weight = std::move(weight);
  l.bias = std::move(bias);
  return l;
}

Layer Layer::conv1d(std::size_t in_channels, std::size_t out_channels,
                    std::size_t kernel_size, std::size_t stride) {
  if (in_channels == 0 || out_channels == 0 || kernel_size == 0) {
    throw InvalidArgument("conv1d layer needs channels and kernel size >= 1");
  }
  if (stride == 0) throw InvalidArgument("conv1d stride must be >= 1");
  Layer l;
  l.kind = LayerKind::conv1d;
  l.in_channels = in_channels;
  l.out_channels = out_channels;
  l.kernel_size = kernel_size;
  l.stride = stride;
  l.weight = Tensor({out_channels, in_channels, kernel_size});
  l.bias = Tensor({out_channels});
  return l;
}

Layer Layer::conv1d(Tensor kernel, Tensor bias, std::size_t stride) {
  if (kernel.rank() != 3 || bias.rank() != 1 || bias.dim(0) != kernel.dim(0)) {
    throw ShapeError("conv1d layer: kernel " + shape_string(kernel.shape) +
                     " and bias " + shape_string(bias.shape) +
                     " are not (out, in, k) and (out)");
  }
  if (stride == 0) throw InvalidArgument("conv1d stride must be >= 1");
  Layer l;
  l.kind = LayerKind::conv1d;
  l.out_channels = kernel.dim(0);
  l.in_channels = kernel.dim(1);
  l.kernel_size = kernel.dim(2);
  l.stride = stride;
  l.weight = std::move(kernel);
  l.bias = std::move(bias);
  return l;
}

Shape Layer::output_shape(const Shape& input) const {
  switch (kind) {
    case LayerKind::dense:
      if (input.size() != 1 || input[0] != in_features) {
        throw ShapeError("expected input shape [" +
                         std::to_string(in_features) + "], got " +
                         shape_string(input));
      }
      return {out_features};
    case LayerKind::conv1d: {
      if (input.size() != 2 || input[0] != in_channels) {
        throw ShapeError("expected input shape [" +
                         std::to_string(in_channels) + ", length], got " +
                         shape_string(input));
      }
      if (input[1] < kernel_size) {
        throw ShapeError("input length " + std::to_string(input[1]) +
                         " is shorter than kernel size " +
                         std::to_string(kernel_size));
      }
      return {out_channels, (input[1] - kernel_size) / stride + 1};
    }
    case LayerKind::relu:
      return input;
    case LayerKind::flatten:
      return {shape_size(input)};
    case LayerKind::softmax:
      if (input.size() != 1) {
        throw ShapeError("softmax expects a rank-1 input, got " +
                         shape_string(input));
      }
      return input;
  }
  throw ShapeError("unknown layer kind");
}

namespace {

std::string layer_label(std::size_t i, const Layer& l) {
  return "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) +
         ")";
}

void dense_forward(const Layer& l, const double* in, double* out) {
  const double* w = l.weight.values.data();
  for (std::size_t o = 0; o < l.out_features; ++o) {
    const double* row = w + o * l.in_features;
    double acc = 0.0;
    for (std::size_t i = 0; i < l.in_features; ++i) acc += row[i] * in[i];
    out[o] = acc + l.bias[o];
  }
}

void conv_forward(const Layer& l, const double* in, std::size_t in_len,
                  double* out, std::size_t out_len) {
  const std::size_t k = l.kernel_size;
  for (std::size_t co = 0; co < l.out_channels; ++co) {
    for (std::size_t t = 0; t < out_len; ++t) {
      double acc = 0.0;
      for (std::size_t ci = 0; ci < l.in_channels; ++ci) {
        const double* w = l.weight.values.data() + (co * l.in_channels + ci) * k;
        const double* x = in + ci * in_len + t * l.stride;
        for (std::size_t j = 0; j < k; ++j) acc += w[j] * x[j];
      }
      out[co * out_len + t] = acc + l.bias[co];
    }
  }
}

void softmax_into(std::span<const double> x, std::span<double> y) {
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  for (double& v : y) v /= sum;
}

Tensor layer_forward(const Layer& l, const Tensor& in) {
  Tensor out(l.output_shape(in.shape));
  switch (l.kind) {
    case LayerKind::dense:
      dense_forward(l, in.values.data(), out.values.data());
      break;
    case LayerKind::conv1d:
      conv_forward(l, in.values.data(), in.dim(1), out.values.data(),
                   out.dim(1));
      break;
    case LayerKind::relu:
      for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case LayerKind::flatten:
      out.values = in.values;
      break;
    case LayerKind::softmax:
      softmax_into(in.data(), out.data());
      break;
  }
  return out;
}

// Propagates `g_out` through layer `l`, filling the input gradient and, when
// requested, accumulating weight and bias gradients.
void layer_backward(const Layer& l, const Tensor& in, const Tensor& out,
                    const Tensor& g_out, Tensor& g_in, Tensor* g_w,
                    Tensor* g_b) {
  g_in = Tensor(in.shape);
  switch (l.kind) {
    case LayerKind::dense: {
      const std::size_t n_in = l.in_features;
      for (std::size_t o = 0; o < l.out_features; ++o) {
        const double g = g_out[o];
        if (g == 0.0) continue;
        const double* row = l.weight.values.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) g_in[i] += row[i] * g;
        if (g_w) {
          double* grow = &(*g_w)[o * n_in];
          for (std::size_t i = 0; i < n_in; ++i) grow[i] += g * in[i];
        }
        if (g_b) (*g_b)[o] += g;
      }
      break;
    }
    case LayerKind::conv1d: {
      const std::size_t in_len = in.dim(1);
      const std::size_t out_len = out.dim(1);
      const std::size_t k = l.kernel_size;
      for (std::size_t co = 0; co < l.out_channels; ++co) {
        for (std::size_t t = 0; t < out_len; ++t) {
          const double g = g_out[co * out_len + t];
          if (g == 0.0) continue;
          for (std::size_t ci = 0; ci < l.in_channels; ++ci) {
            const std::size_t wbase = (co * l.in_channels + ci) * k;
            const std::size_t xbase = ci * in_len + t * l.stride;
            for (std::size_t j = 0; j < k; ++j) {
              g_in[xbase + j] += l.weight[wbase + j] * g;
              if (g_w) (*g_w)[wbase + j] += g * in[xbase + j];
            }
          }
          if (g_b) (*g_b)[co] += g;
        }
      }
      break;
    }
    case LayerKind::relu:
      for (std::size_t i = 0; i < in.size(); ++i)
        g_in[i] = in[i] > 0.0 ? g_out[i] : 0.0;
      break;
    case LayerKind::flatten:
      g_in.values = g_out.values;
      break;
    case LayerKind::softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) dot += g_out[i] * out[i];
      for (std::size_t i = 0; i < out.size(); ++i)
        g_in[i] = out[i] * (g_out[i] - dot);
      break;
    }
  }
}

}  // namespace

NetworkModel::NetworkModel(Shape input_shape, std::vector<Layer> layers,
                           std::uint64_t seed)
    : input_shape_(std::move(input_shape)),
      layers_(std::move(layers)),
      seed_(seed) {
  if (layers_.empty()) throw InvalidArgument("model needs at least one layer");
  if (input_shape_.empty() || shape_size(input_shape_) == 0) {
    throw ShapeError("model input shape must be non-empty");
  }
  Shape s = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.kind == LayerKind::conv1d && l.stride == 0) {
      throw InvalidArgument(layer_label(i, l) + ": stride must be >= 1");
    }
    try {
      s = l.output_shape(s);
    } catch (const ShapeError& e) {
      throw ShapeError(layer_label(i, l) + ": " + e.what());
    }
  }
  if (s.size() != 1) {
    throw ShapeError("last layer must emit a rank-1 logit vector, got " +
                     shape_string(s));
  }
  class_count_ = s[0];
}

std::vector<Tensor*> NetworkModel::parameters() {
  std::vector<Tensor*> out;
  for (Layer& l : layers_) {
    if (!l.has_params()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> NetworkModel::parameters() const {
  std::vector<const Tensor*> out;
  for (const Layer& l : layers_) {
    if (!l.has_params()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void NetworkModel::initialize(std::uint64_t seed) {
  seed_ = seed;
  Rng rng(seed);
  for (Layer& l : layers_) {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    if (l.kind == LayerKind::dense) {
      fan_in = l.in_features;
      fan_out = l.out_features;
    } else if (l.kind == LayerKind::conv1d) {
      fan_in = l.in_channels * l.kernel_size;
      fan_out = l.out_channels * l.kernel_size;
    } else {
      continue;
    }
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : l.weight.values) w = rng.uniform(-s, s);
    std::fill(l.bias.values.begin(), l.bias.values.end(), 0.0);
  }
}

Tensor NetworkModel::input_tensor(std::span<const double> series) const {
  if (series.size() != input_length()) {
    throw ShapeError("series of length " + std::to_string(series.size()) +
                     " does not match model input " +
                     shape_string(input_shape_));
  }
  return Tensor(input_shape_, std::vector<double>(series.begin(), series.end()));
}

ForwardResult forward(const NetworkModel& model, const Tensor& input) {
  if (input.shape != model.input_shape()) {
    throw ShapeError("layer 0 (" +
                     std::string(to_string(model.layers()[0].kind)) +
                     "): input shape " + shape_string(input.shape) +
                     " does not match model input " +
                     shape_string(model.input_shape()));
  }
  ForwardResult r;
  r.trace.activations.reserve(model.layer_count() + 1);
  r.trace.activations.push_back(input);
  for (const Layer& l : model.layers()) {
    r.trace.activations.push_back(layer_forward(l, r.trace.activations.back()));
  }
  r.logits = r.trace.activations.back();
  return r;
}

Tensor forward_logits(const NetworkModel& model, const Tensor& input) {
  if (input.shape != model.input_shape()) {
    throw ShapeError("layer 0: input shape " + shape_string(input.shape) +
                     " does not match model input " +
                     shape_string(model.input_shape()));
  }
  Tensor cur = input;
  for (const Layer& l : model.layers()) cur = layer_forward(l, cur);
  return cur;
}

Tensor forward_logits(const NetworkModel& model,
                      std::span<const double> series) {
  return forward_logits(model, model.input_tensor(series));
}

Gradients backward(const NetworkModel& model, const ForwardTrace& trace,
                   const Tensor& output_grad, bool want_params) {
  const auto& layers = model.layers();
  if (trace.layer_count() != layers.size()) {
    throw ShapeError("trace has " + std::to_string(trace.layer_count()) +
                     " layers, model has " + std::to_string(layers.size()));
  }
  if (output_grad.shape != trace.activations.back().shape) {
    throw ShapeError("output gradient shape " +
                     shape_string(output_grad.shape) +
                     " does not match logits " +
                     shape_string(trace.activations.back().shape));
  }
  Gradients g;
  if (want_params) {
    for (const Tensor* p : model.parameters()) g.params.emplace_back(p->shape);
  }
  std::size_t param_slot = g.params.size();
  Tensor grad = output_grad;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Layer& l = layers[i];
    Tensor* gw = nullptr;
    Tensor* gb = nullptr;
    if (want_params && l.has_params()) {
      param_slot -= 2;
      gw = &g.params[param_slot];
      gb = &g.params[param_slot + 1];
    }
    Tensor g_in;
    layer_backward(l, trace.input(i), trace.output(i), grad, g_in, gw, gb);
    grad = std::move(g_in);
  }
  g.input = std::move(grad);
  return g;
}

Tensor backward_input(const NetworkModel& model, const ForwardTrace& trace,
                      std::size_t output_selector) {
  if (output_selector >= model.class_count()) {
    throw InvalidArgument("class index " + std::to_string(output_selector) +
                          " out of range for " +
                          std::to_string(model.class_count()) + " logits");
  }
  Tensor seed(trace.activations.back().shape);
  seed[output_selector] = 1.0;
  return backward(model, trace, seed, false).input;
}

ParamGradients backward_params(const NetworkModel& model,
                               const ForwardTrace& trace,
                               const Tensor& loss_grad) {
  return backward(model, trace, loss_grad, true).params;
}

Tensor layer_input_gradient(const Layer& layer, const Tensor& input,
                            const Tensor& output, const Tensor& output_grad) {
  Tensor g_in;
  layer_backward(layer, input, output, output_grad, g_in, nullptr, nullptr);
  return g_in;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (!logits.empty()) softmax_into(logits, out);
  return out;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace tsxai
