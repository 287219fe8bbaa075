#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tsxai/binary_io.hpp"
#include "tsxai/ndnet.hpp"

namespace tsxai {
namespace {

constexpr char kMagic[8] = {'T', 'S', 'X', 'A', 'I', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;
// Upper bound on any stored dimension; rejects garbage before allocating.
constexpr std::uint64_t kMaxDim = 1ULL << 28;

void put_tensor(std::ostream& out, const Tensor& t) {
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape) binio::put_le<std::uint64_t>(out, d);
  for (double v : t.values) binio::put_f64(out, v);
}

Shape get_shape(std::istream& in) {
  const auto rank = binio::get_le<std::uint32_t>(in);
  if (rank == 0 || rank > 8) throw IoError("model file: bad tensor rank");
  Shape s(rank);
  std::uint64_t total = 1;
  for (auto& d : s) {
    const auto v = binio::get_le<std::uint64_t>(in);
    if (v == 0 || v > kMaxDim) throw IoError("model file: bad dimension");
    d = static_cast<std::size_t>(v);
    total *= v;
    if (total > kMaxDim) throw IoError("model file: tensor too large");
  }
  return s;
}

Tensor get_tensor(std::istream& in) {
  Tensor t(get_shape(in));
  for (double& v : t.values) {
    v = binio::get_f64(in);
    if (!std::isfinite(v)) throw IoError("model file: non-finite parameter");
  }
  return t;
}

}  // namespace

void save_model(const NetworkModel& model, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  binio::put_le<std::uint32_t>(out, kVersion);
  binio::put_le<std::uint64_t>(out, model.seed());
  binio::put_le<std::uint32_t>(out,
                               static_cast<std::uint32_t>(model.input_shape().size()));
  for (std::size_t d : model.input_shape()) binio::put_le<std::uint64_t>(out, d);
  binio::put_le<std::uint32_t>(out,
                               static_cast<std::uint32_t>(model.layer_count()));
  for (const Layer& l : model.layers()) {
    binio::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.kind));
    if (l.kind == LayerKind::conv1d) binio::put_le<std::uint64_t>(out, l.stride);
    if (l.has_params()) {
      put_tensor(out, l.weight);
      put_tensor(out, l.bias);
    }
  }
  if (!out) throw IoError("failed to write model");
}

void save_model(const NetworkModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  save_model(model, out);
}

std::vector<std::uint8_t> serialize_model(const NetworkModel& model) {
  std::ostringstream os(std::ios::binary);
  save_model(model, os);
  const std::string s = os.str();
  return {s.begin(), s.end()};
}

NetworkModel load_model(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) ||
      !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw IoError("not a model file (bad magic)");
  }
  const auto version = binio::get_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw IoError("unsupported model file version " + std::to_string(version));
  }
  const auto seed = binio::get_le<std::uint64_t>(in);
  Shape input = get_shape(in);
  const auto n_layers = binio::get_le<std::uint32_t>(in);
  if (n_layers == 0 || n_layers > 1024) throw IoError("model file: bad layer count");
  std::vector<Layer> layers;
  layers.reserve(n_layers);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto kind = static_cast<LayerKind>(binio::get_le<std::uint8_t>(in));
    switch (kind) {
      case LayerKind::dense: {
        Tensor w = get_tensor(in);
        Tensor b = get_tensor(in);
        layers.push_back(Layer::dense(std::move(w), std::move(b)));
        break;
      }
      case LayerKind::conv1d: {
        const auto stride = binio::get_le<std::uint64_t>(in);
        Tensor w = get_tensor(in);
        Tensor b = get_tensor(in);
        layers.push_back(Layer::conv1d(std::move(w), std::move(b),
                                       static_cast<std::size_t>(stride)));
        break;
      }
      case LayerKind::relu:
      case LayerKind::flatten:
      case LayerKind::softmax:
        layers.emplace_back();
        layers.back().kind = kind;
        break;
      default:
        throw IoError("model file: unknown layer kind " +
                      std::to_string(static_cast<int>(kind)));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError("model file: trailing data after the last layer");
  }
  try {
    return NetworkModel(std::move(input), std::move(layers), seed);
  } catch (const Error& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
}

NetworkModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path);
  return load_model(in);
}

namespace binio {

void write_f64_file(const std::string& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (double v : values) put_f64(out, v);
  if (!out) throw IoError("failed to write " + path);
}

std::vector<double> read_f64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % 8 != 0) {
    throw IoError(path + ": size " + std::to_string(bytes) +
                  " is not a multiple of 8 bytes");
  }
  in.seekg(0);
  std::vector<double> out(bytes / 8);
  for (double& v : out) v = get_f64(in);
  return out;
}

}  // namespace binio
}  // namespace tsxai
