#include "vizrank/network.hpp"

#include <algorithm>
#include <string>

#include "vizrank/error.hpp"
#include "vizrank/stats.hpp"

namespace vizrank {

Architecture Architecture::standard() {
  Architecture arch;
  arch.input = {1, 64, 64};
  arch.layers = {
      LayerSpec::conv(8, 5, 2),
      LayerSpec::conv(16, 3, 2),
      LayerSpec::conv(32, 3, 2),
      LayerSpec::dense(128),
      LayerSpec::dense(static_cast<int>(kFeatureCount), false),
  };
  return arch;
}

std::vector<Shape> Architecture::output_shapes() const {
  std::vector<Shape> shapes;
  Shape current = input;
  for (const auto& layer : layers) {
    if (layer.outputs < 1) throw Error(Errc::InvalidConfig, "layer with no outputs");
    if (layer.kind == LayerSpec::Kind::Conv) {
      if (layer.kernel < 1 || layer.stride < 1 || layer.kernel > current.height ||
          layer.kernel > current.width) {
        throw Error(Errc::InvalidConfig, "convolution kernel does not fit its input");
      }
      current = {layer.outputs, (current.height - layer.kernel) / layer.stride + 1,
                 (current.width - layer.kernel) / layer.stride + 1};
    } else {
      current = {layer.outputs, 1, 1};
    }
    shapes.push_back(current);
  }
  return shapes;
}

std::size_t Architecture::output_size() const {
  const auto shapes = output_shapes();
  return shapes.empty() ? input.size() : shapes.back().size();
}

std::size_t Architecture::parameter_count() const {
  std::size_t count = 0;
  Shape in = input;
  const auto shapes = output_shapes();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto outputs = static_cast<std::size_t>(layer.outputs);
    if (layer.kind == LayerSpec::Kind::Conv) {
      const auto k = static_cast<std::size_t>(layer.kernel);
      count += outputs * static_cast<std::size_t>(in.channels) * k * k + outputs;
    } else {
      count += outputs * in.size() + outputs;
    }
    in = shapes[l];
  }
  return count;
}

nlohmann::ordered_json Architecture::to_json() const {
  nlohmann::ordered_json json;
  json["input"] = {input.channels, input.height, input.width};
  json["layers"] = nlohmann::ordered_json::array();
  for (const auto& layer : layers) {
    nlohmann::ordered_json entry;
    entry["kind"] = layer.kind == LayerSpec::Kind::Conv ? "conv" : "dense";
    entry["outputs"] = layer.outputs;
    if (layer.kind == LayerSpec::Kind::Conv) {
      entry["kernel"] = layer.kernel;
      entry["stride"] = layer.stride;
    }
    entry["relu"] = layer.relu;
    json["layers"].push_back(entry);
  }
  return json;
}

Architecture Architecture::from_json(const nlohmann::json& json) {
  Architecture arch;
  try {
    const auto& in = json.at("input");
    arch.input = {in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
    for (const auto& entry : json.at("layers")) {
      LayerSpec layer;
      const auto kind = entry.at("kind").get<std::string>();
      if (kind == "conv") {
        layer.kind = LayerSpec::Kind::Conv;
        layer.kernel = entry.at("kernel").get<int>();
        layer.stride = entry.at("stride").get<int>();
      } else if (kind == "dense") {
        layer.kind = LayerSpec::Kind::Dense;
      } else {
        throw Error(Errc::CorruptBundle, "unknown layer kind '" + kind + "'");
      }
      layer.outputs = entry.at("outputs").get<int>();
      layer.relu = entry.at("relu").get<bool>();
      arch.layers.push_back(layer);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptBundle, std::string("bad architecture: ") + e.what());
  }
  arch.output_shapes();
  return arch;
}

template <typename T>
Network<T>::Network(Architecture architecture) : architecture_(std::move(architecture)) {
  const auto shapes = architecture_.output_shapes();
  Shape in = architecture_.input;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < architecture_.layers.size(); ++l) {
    const auto& spec = architecture_.layers[l];
    LayerLayout layout;
    layout.in = in;
    layout.out = shapes[l];
    layout.weight_offset = offset;
    const auto outputs = static_cast<std::size_t>(spec.outputs);
    if (spec.kind == LayerSpec::Kind::Conv) {
      const auto k = static_cast<std::size_t>(spec.kernel);
      layout.weight_count = outputs * static_cast<std::size_t>(in.channels) * k * k;
    } else {
      layout.weight_count = outputs * in.size();
    }
    layout.bias_offset = offset + layout.weight_count;
    offset = layout.bias_offset + outputs;
    layout_.push_back(layout);
    in = shapes[l];
  }
  parameters_.assign(offset, T{0});
}

template <typename T>
std::span<T> Network<T>::weights(std::size_t layer) {
  const auto& l = layout_.at(layer);
  return std::span<T>(parameters_).subspan(l.weight_offset, l.weight_count);
}

template <typename T>
std::span<T> Network<T>::biases(std::size_t layer) {
  const auto& l = layout_.at(layer);
  return std::span<T>(parameters_).subspan(l.bias_offset, l.out.channels);
}

template <typename T>
std::span<const T> Network<T>::weights(std::size_t layer) const {
  const auto& l = layout_.at(layer);
  return std::span<const T>(parameters_).subspan(l.weight_offset, l.weight_count);
}

template <typename T>
std::span<const T> Network<T>::biases(std::size_t layer) const {
  const auto& l = layout_.at(layer);
  return std::span<const T>(parameters_).subspan(l.bias_offset, l.out.channels);
}

namespace {

template <typename T>
void conv_forward(const T* in, const Shape& is, const T* w, const T* b, int kernel, int stride,
                  T* out, const Shape& os) {
  const int plane = os.height * os.width;
  for (int o = 0; o < os.channels; ++o) {
    T* dst = out + static_cast<std::ptrdiff_t>(o) * plane;
    std::fill(dst, dst + plane, b[o]);
    for (int c = 0; c < is.channels; ++c) {
      const T* src = in + static_cast<std::ptrdiff_t>(c) * is.height * is.width;
      const T* wk = w + (static_cast<std::ptrdiff_t>(o) * is.channels + c) * kernel * kernel;
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const T weight = wk[ky * kernel + kx];
          for (int oy = 0; oy < os.height; ++oy) {
            const T* row = src + static_cast<std::ptrdiff_t>(oy * stride + ky) * is.width + kx;
            T* drow = dst + static_cast<std::ptrdiff_t>(oy) * os.width;
            for (int ox = 0; ox < os.width; ++ox) drow[ox] += weight * row[ox * stride];
          }
        }
      }
    }
  }
}

// grad_out is already multiplied by the activation derivative. grad_in may be null.
template <typename T>
void conv_backward(const T* in, const Shape& is, const T* w, int kernel, int stride,
                   const T* grad_out, const Shape& os, T* grad_w, T* grad_b, T* grad_in) {
  const int plane = os.height * os.width;
  for (int o = 0; o < os.channels; ++o) {
    const T* g = grad_out + static_cast<std::ptrdiff_t>(o) * plane;
    T bias_sum{0};
    for (int i = 0; i < plane; ++i) bias_sum += g[i];
    grad_b[o] += bias_sum;
    for (int c = 0; c < is.channels; ++c) {
      const std::ptrdiff_t in_offset = static_cast<std::ptrdiff_t>(c) * is.height * is.width;
      const T* src = in + in_offset;
      const std::ptrdiff_t w_offset = (static_cast<std::ptrdiff_t>(o) * is.channels + c) * kernel * kernel;
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const T weight = w[w_offset + ky * kernel + kx];
          T acc{0};
          for (int oy = 0; oy < os.height; ++oy) {
            const std::ptrdiff_t row_offset = static_cast<std::ptrdiff_t>(oy * stride + ky) * is.width + kx;
            const T* row = src + row_offset;
            const T* grow = g + static_cast<std::ptrdiff_t>(oy) * os.width;
            for (int ox = 0; ox < os.width; ++ox) acc += grow[ox] * row[ox * stride];
            if (grad_in) {
              T* gin = grad_in + in_offset + row_offset;
              for (int ox = 0; ox < os.width; ++ox) gin[ox * stride] += weight * grow[ox];
            }
          }
          grad_w[w_offset + ky * kernel + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void dense_forward(const T* in, std::size_t n_in, const T* w, const T* b, T* out, std::size_t n_out) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const T* row = w + o * n_in;
    T acc{0};
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
    out[o] = acc + b[o];
  }
}

template <typename T>
void dense_backward(const T* in, std::size_t n_in, const T* w, const T* grad_out, std::size_t n_out,
                    T* grad_w, T* grad_b, T* grad_in) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const T g = grad_out[o];
    grad_b[o] += g;
    if (g == T{0}) continue;
    T* gw = grad_w + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) gw[i] += g * in[i];
    if (grad_in) {
      const T* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) grad_in[i] += g * row[i];
    }
  }
}

}  // namespace

template <typename T>
void Network<T>::forward(std::span<const T> input, Trace& trace) const {
  if (input.size() != architecture_.input.size()) {
    throw Error(Errc::ShapeMismatch, "network expects " + std::to_string(architecture_.input.size()) +
                                         " inputs, got " + std::to_string(input.size()));
  }
  auto& acts = trace.activations;
  acts.resize(layout_.size() + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layout_.size(); ++l) {
    const auto& spec = architecture_.layers[l];
    const auto& lay = layout_[l];
    auto& out = acts[l + 1];
    out.resize(lay.out.size());
    const T* w = parameters_.data() + lay.weight_offset;
    const T* b = parameters_.data() + lay.bias_offset;
    if (spec.kind == LayerSpec::Kind::Conv) {
      conv_forward(acts[l].data(), lay.in, w, b, spec.kernel, spec.stride, out.data(), lay.out);
    } else {
      dense_forward(acts[l].data(), lay.in.size(), w, b, out.data(), out.size());
    }
    if (spec.relu) {
      for (auto& v : out) v = std::max(v, T{0});
    }
  }
}

template <typename T>
std::vector<T> Network<T>::forward(std::span<const T> input) const {
  Trace trace;
  forward(input, trace);
  return std::move(trace.activations.back());
}

template <typename T>
void Network<T>::backward(const Trace& trace, std::span<const T> output_grad,
                          std::span<T> parameter_grad) const {
  if (parameter_grad.size() != parameters_.size() ||
      output_grad.size() != trace.activations.back().size()) {
    throw Error(Errc::ShapeMismatch, "backward: gradient buffer size mismatch");
  }
  std::vector<T> grad(output_grad.begin(), output_grad.end());
  std::vector<T> grad_in;
  for (std::size_t l = layout_.size(); l-- > 0;) {
    const auto& spec = architecture_.layers[l];
    const auto& lay = layout_[l];
    const auto& out = trace.activations[l + 1];
    if (spec.relu) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(out[i] > T{0})) grad[i] = T{0};
      }
    }
    const bool need_input_grad = l > 0;
    grad_in.assign(need_input_grad ? lay.in.size() : 0, T{0});
    const T* w = parameters_.data() + lay.weight_offset;
    T* gw = parameter_grad.data() + lay.weight_offset;
    T* gb = parameter_grad.data() + lay.bias_offset;
    T* gin = need_input_grad ? grad_in.data() : nullptr;
    if (spec.kind == LayerSpec::Kind::Conv) {
      conv_backward(trace.activations[l].data(), lay.in, w, spec.kernel, spec.stride, grad.data(),
                    lay.out, gw, gb, gin);
    } else {
      dense_backward(trace.activations[l].data(), lay.in.size(), w, grad.data(), grad.size(), gw,
                     gb, gin);
    }
    grad.swap(grad_in);
  }
}

template class Network<float>;
template class Network<double>;

}  // namespace vizrank
