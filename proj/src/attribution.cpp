#include "tsxai/attribution.hpp"

#include <cmath>

#include "tsxai/error.hpp"

namespace tsxai {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::saliency:
      return "saliency";
    case Method::lrp:
      return "lrp";
    case Method::deeplift:
      return "deeplift";
    case Method::lime:
      return "lime";
    case Method::shap:
      return "shap";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::saliency, Method::lrp, Method::deeplift,
                   Method::lime, Method::shap}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

void Explainer::validate() const {
  if (!(lrp_epsilon >= 0.0) || !std::isfinite(lrp_epsilon)) {
    throw InvalidArgument("lrp epsilon must be finite and >= 0");
  }
  if (lime.num_samples < 10) {
    throw InvalidArgument("lime num_samples must be >= 10");
  }
  if (lime.kernel_width && !(*lime.kernel_width > 0.0)) {
    throw InvalidArgument("lime kernel_width must be > 0");
  }
  if (!(lime.ridge >= 0.0)) throw InvalidArgument("lime ridge must be >= 0");
  if (!std::isfinite(lime.mask_value)) {
    throw InvalidArgument("lime mask_value must be finite");
  }
  if (shap.num_coalitions < 1) {
    throw InvalidArgument("shap num_coalitions must be >= 1");
  }
}

namespace {

void check_target(const NetworkModel& model, std::size_t target_class) {
  if (target_class >= model.class_count()) {
    throw InvalidArgument("target class " + std::to_string(target_class) +
                          " out of range for " +
                          std::to_string(model.class_count()) + " classes");
  }
}

void require_propagation_support(const NetworkModel& model,
                                 std::string_view method) {
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    const LayerKind k = model.layers()[i].kind;
    if (k == LayerKind::softmax) {
      throw UnsupportedLayer(std::string(method) + ": layer " +
                             std::to_string(i) + " (" +
                             std::string(to_string(k)) +
                             ") has no propagation rule");
    }
  }
}

double stabilise(double z, double eps) {
  return z + (z >= 0.0 ? eps : -eps);
}

// Redistributes relevance from a dense or conv1d layer's output onto its
// input with the epsilon rule.
Tensor lrp_linear(const Layer& l, const Tensor& a, const Tensor& z,
                  const Tensor& r_out, double eps) {
  Tensor r_in(a.shape);
  if (l.kind == LayerKind::dense) {
    const std::size_t n_in = l.in_features;
    for (std::size_t k = 0; k < l.out_features; ++k) {
      const double d = stabilise(z[k], eps);
      if (d == 0.0 || r_out[k] == 0.0) continue;
      const double s = r_out[k] / d;
      const double* row = l.weight.values.data() + k * n_in;
      for (std::size_t j = 0; j < n_in; ++j) r_in[j] += a[j] * row[j] * s;
    }
    return r_in;
  }
  const std::size_t in_len = a.dim(1);
  const std::size_t out_len = z.dim(1);
  const std::size_t kk = l.kernel_size;
  for (std::size_t co = 0; co < l.out_channels; ++co) {
    for (std::size_t t = 0; t < out_len; ++t) {
      const std::size_t o = co * out_len + t;
      const double d = stabilise(z[o], eps);
      if (d == 0.0 || r_out[o] == 0.0) continue;
      const double s = r_out[o] / d;
      for (std::size_t ci = 0; ci < l.in_channels; ++ci) {
        const std::size_t wbase = (co * l.in_channels + ci) * kk;
        const std::size_t xbase = ci * in_len + t * l.stride;
        for (std::size_t j = 0; j < kk; ++j) {
          r_in[xbase + j] += a[xbase + j] * l.weight[wbase + j] * s;
        }
      }
    }
  }
  return r_in;
}

}  // namespace

std::vector<double> saliency(const NetworkModel& model,
                             std::span<const double> sample,
                             std::size_t target_class) {
  check_target(model, target_class);
  const auto fr = forward(model, model.input_tensor(sample));
  Tensor g = backward_input(model, fr.trace, target_class);
  for (double& v : g.values) v = std::abs(v);
  return std::move(g.values);
}

std::vector<double> lrp_epsilon(const NetworkModel& model,
                                std::span<const double> sample,
                                std::size_t target_class, double epsilon) {
  if (!(epsilon >= 0.0)) throw InvalidArgument("lrp epsilon must be >= 0");
  check_target(model, target_class);
  require_propagation_support(model, "lrp");
  const auto fr = forward(model, model.input_tensor(sample));
  Tensor r(fr.logits.shape);
  r[target_class] = fr.logits[target_class];
  for (std::size_t i = model.layer_count(); i-- > 0;) {
    const Layer& l = model.layers()[i];
    switch (l.kind) {
      case LayerKind::dense:
      case LayerKind::conv1d:
        r = lrp_linear(l, fr.trace.input(i), fr.trace.output(i), r, epsilon);
        break;
      case LayerKind::relu:
        break;
      case LayerKind::flatten:
        r = r.reshaped(fr.trace.input(i).shape);
        break;
      case LayerKind::softmax:
        throw UnsupportedLayer("lrp: softmax layer has no propagation rule");
    }
  }
  return std::move(r.values);
}

std::vector<double> deeplift_rescale(const NetworkModel& model,
                                     std::span<const double> sample,
                                     std::size_t target_class,
                                     std::span<const double> reference) {
  check_target(model, target_class);
  require_propagation_support(model, "deeplift");
  if (reference.size() != sample.size()) {
    throw ShapeError("deeplift reference of length " +
                     std::to_string(reference.size()) +
                     " does not match sample length " +
                     std::to_string(sample.size()));
  }
  constexpr double kRescaleFloor = 1e-9;
  const auto fx = forward(model, model.input_tensor(sample));
  const auto fr = forward(model, model.input_tensor(reference));
  Tensor mult(fx.logits.shape);
  mult[target_class] = 1.0;
  for (std::size_t i = model.layer_count(); i-- > 0;) {
    const Layer& l = model.layers()[i];
    const Tensor& x_in = fx.trace.input(i);
    const Tensor& x_out = fx.trace.output(i);
    if (l.kind == LayerKind::relu) {
      const Tensor& r_in = fr.trace.input(i);
      const Tensor& r_out = fr.trace.output(i);
      for (std::size_t k = 0; k < mult.size(); ++k) {
        const double dx = x_in[k] - r_in[k];
        const double slope = std::abs(dx) < kRescaleFloor
                                 ? (x_in[k] > 0.0 ? 1.0 : 0.0)
                                 : (x_out[k] - r_out[k]) / dx;
        mult[k] *= slope;
      }
    } else {
      // Linear and reshape layers: multipliers follow the transpose.
      mult = layer_input_gradient(l, x_in, x_out, mult);
    }
  }
  std::vector<double> out(sample.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mult[i] * (sample[i] - reference[i]);
  }
  return out;
}

RelevanceVector explain(const Explainer& explainer, const NetworkModel& model,
                        std::span<const double> sample,
                        std::size_t sample_index) {
  explainer.validate();
  if (sample.size() != model.input_length()) {
    throw ShapeError("sample length " + std::to_string(sample.size()) +
                     " does not match model input length " +
                     std::to_string(model.input_length()));
  }
  const std::size_t target =
      explainer.target_class
          ? *explainer.target_class
          : argmax(forward_logits(model, sample).data());
  check_target(model, target);
  const std::vector<double> zeros(sample.size(), 0.0);
  std::span<const double> ref =
      explainer.reference.empty() ? std::span<const double>(zeros)
                                  : std::span<const double>(explainer.reference);

  RelevanceVector out;
  out.method = std::string(to_string(explainer.method));
  out.target_class = target;
  out.sample_index = sample_index;
  switch (explainer.method) {
    case Method::saliency:
      out.values = saliency(model, sample, target);
      break;
    case Method::lrp:
      out.values = lrp_epsilon(model, sample, target, explainer.lrp_epsilon);
      break;
    case Method::deeplift:
      out.values = deeplift_rescale(model, sample, target, ref);
      break;
    case Method::lime:
      out.values =
          lime_surrogate(model, sample, target, explainer.lime, sample_index);
      break;
    case Method::shap:
      out.values = kernel_shap(model, sample, target, explainer.shap, ref,
                               sample_index);
      break;
  }
  for (double v : out.values) {
    if (!std::isfinite(v)) {
      throw Error(out.method + ": non-finite relevance on sample " +
                  std::to_string(sample_index));
    }
  }
  return out;
}

std::vector<RelevanceVector> explain_batch(const Explainer& explainer,
                                           const NetworkModel& model,
                                           const Dataset& data, Exec exec) {
  std::vector<RelevanceVector> out(data.size());
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      out[i] = explain(explainer, model, data.samples[i].values, i);
    }
    return out;
  }
  for_each_index(data.size(), exec, [&](std::size_t i) {
    out[i] = explain(explainer, model, data.samples[i].values, i);
  });
  return out;
}

}  // namespace tsxai
