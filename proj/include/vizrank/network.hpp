#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace vizrank {

struct Shape {
  int channels = 1;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  bool operator==(const Shape&) const = default;
};

struct LayerSpec {
  enum class Kind { Conv, Dense };

  Kind kind = Kind::Dense;
  int outputs = 1;  // filters for Conv, units for Dense
  int kernel = 0;   // Conv only
  int stride = 1;   // Conv only
  bool relu = true;

  static LayerSpec conv(int filters, int kernel, int stride, bool relu = true) {
    return {Kind::Conv, filters, kernel, stride, relu};
  }
  static LayerSpec dense(int units, bool relu = true) { return {Kind::Dense, units, 0, 1, relu}; }

  bool operator==(const LayerSpec&) const = default;
};

// Layer list over a fixed input shape. Convolutions use no padding; a Dense
// layer flattens whatever precedes it.
struct Architecture {
  Shape input{1, 64, 64};
  std::vector<LayerSpec> layers;

  // 1x64x64 -> conv 8@5x5/2 -> conv 16@3x3/2 -> conv 32@3x3/2 -> dense 128 -> dense 26.
  static Architecture standard();

  // Output shape of every layer. Throws InvalidConfig when a kernel does not fit.
  std::vector<Shape> output_shapes() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;

  nlohmann::ordered_json to_json() const;
  static Architecture from_json(const nlohmann::json& json);

  bool operator==(const Architecture&) const = default;
};

// Feed-forward conv/dense network with a flat parameter buffer. Each layer
// stores its weights ([out][in][k][k] for conv, [out][in] for dense) followed
// by its biases.
template <typename T>
class Network {
 public:
  // Post-activation outputs; entry 0 is the input, entry l + 1 the output of layer l.
  struct Trace {
    std::vector<std::vector<T>> activations;
  };

  Network() = default;
  explicit Network(Architecture architecture);

  const Architecture& architecture() const { return architecture_; }
  std::span<T> parameters() { return parameters_; }
  std::span<const T> parameters() const { return parameters_; }
  std::span<T> weights(std::size_t layer);
  std::span<T> biases(std::size_t layer);
  std::span<const T> weights(std::size_t layer) const;
  std::span<const T> biases(std::size_t layer) const;

  // Throws ShapeMismatch when input.size() differs from the architecture input.
  std::vector<T> forward(std::span<const T> input) const;
  void forward(std::span<const T> input, Trace& trace) const;

  // Adds d(loss)/d(parameters) to `parameter_grad` given d(loss)/d(output).
  void backward(const Trace& trace, std::span<const T> output_grad,
                std::span<T> parameter_grad) const;

  template <typename U>
  Network<U> cast() const {
    Network<U> out(architecture_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < parameters_.size(); ++i) dst[i] = static_cast<U>(parameters_[i]);
    return out;
  }

  bool operator==(const Network&) const = default;

 private:
  struct LayerLayout {
    Shape in;
    Shape out;
    std::size_t weight_offset = 0;
    std::size_t weight_count = 0;
    std::size_t bias_offset = 0;

    bool operator==(const LayerLayout&) const = default;
  };

  Architecture architecture_;
  std::vector<LayerLayout> layout_;
  std::vector<T> parameters_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace vizrank
