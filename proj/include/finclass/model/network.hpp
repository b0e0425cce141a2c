#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "finclass/nn/layers.hpp"
#include "finclass/nn/tensor.hpp"

namespace finclass::model {

// Layer descriptors. Shapes are resolved when a Network is built.
struct ConvSpec {
  std::size_t kernel = 5;
  std::size_t filters = 32;
  nn::Padding padding = nn::Padding::kValid;
};
struct PoolSpec {
  nn::PoolParams params{5, 5};
};
struct ActivationSpec {
  nn::Activation kind = nn::Activation::kRelu;
};
struct FlattenSpec {};
struct DenseSpec {
  std::size_t units = 512;
};
struct DropoutSpec {
  double keep_prob = 0.8;
};

using LayerSpec =
    std::variant<ConvSpec, PoolSpec, ActivationSpec, FlattenSpec, DenseSpec,
                 DropoutSpec>;

struct ArchitectureSpec {
  nn::Shape input{100, 100, 4};
  std::vector<LayerSpec> layers;
  // Free-form key/value pairs carried through checkpoints (class names,
  // preprocessing settings).
  std::vector<std::pair<std::string, std::string>> metadata;

  // Text rendering, one layer per line; parse_architecture inverts it.
  std::string render() const;
};

// Throws FormatError on malformed text.
ArchitectureSpec parse_architecture(const std::string& text);

struct FishnetOptions {
  std::size_t num_classes = 2;
  nn::Activation activation = nn::Activation::kRelu;
  std::size_t hidden_units = 512;
  double keep_prob = 0.8;
};

// Input [100,100,4] -> conv5x5x32 valid -> act -> pool 5 -> conv5x5x64 valid
// -> act -> pool 5 -> conv5x5x32 same -> act -> flatten -> dense hidden ->
// act -> dropout -> dense num_classes. Softmax is applied to the logits by
// predict and the loss.
ArchitectureSpec fishnet_architecture(const FishnetOptions& options);

// Resolved layer: descriptor, its shapes and (for conv/dense) parameters.
struct Layer {
  LayerSpec spec;
  nn::Shape input_shape;
  nn::Shape output_shape;
  nn::Tensor weights;  // conv filters [K,K,C,F] or dense [M,N]
  nn::Tensor bias;
  std::string note;  // why a layer deviates from the plain reading, if it does

  bool trainable() const { return weights.size() > 0; }
};

// Per-pass scratch owned by the caller, so one Network can serve concurrent
// passes as long as each uses its own Trace.
struct Trace {
  std::vector<nn::Tensor> values;  // values[i] = input of layer i; back() = logits
  std::vector<std::vector<std::size_t>> argmax;
  std::vector<std::vector<std::uint8_t>> dropout_masks;
};

struct PassOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
  std::uint64_t dropout_counter = 0;
};

// One gradient tensor per trainable parameter, in parameters() order.
using Gradients = std::vector<nn::Tensor>;

inline constexpr double kClassifierInitScale = 0.1;

class Network {
 public:
  // Resolves shapes; throws InvalidShape naming the offending layer.
  explicit Network(ArchitectureSpec spec);

  const ArchitectureSpec& architecture() const { return spec_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const nn::Shape& output_shape() const { return layers_.back().output_shape; }
  std::size_t num_classes() const { return output_shape()[0]; }

  // Weights then bias for every trainable layer, in layer order.
  std::vector<nn::Tensor*> parameters();
  std::vector<const nn::Tensor*> parameters() const;
  std::size_t parameter_count() const;

  // He-style uniform init in +-sqrt(6 / fan_in); biases zero. The last
  // trainable layer's range is scaled by kClassifierInitScale so an
  // untrained network predicts close to uniform.
  void initialize(std::uint64_t seed);

  // Returns the logits. `trace` may be null when no backward pass follows.
  nn::Tensor forward(const nn::Tensor& input, const PassOptions& options,
                     Trace* trace = nullptr) const;

  // Backpropagates dLoss/dLogits through a trace recorded by forward.
  Gradients backward(const Trace& trace, const nn::Tensor& grad_logits) const;

  Gradients zero_gradients() const;

  // Human-readable shape trace, one line per layer.
  std::string shape_trace() const;

 private:
  ArchitectureSpec spec_;
  std::vector<Layer> layers_;
};

Network build_fishnet(std::size_t num_classes, nn::Activation activation,
                      std::uint64_t seed);
Network build_fishnet(const FishnetOptions& options, std::uint64_t seed);

struct Prediction {
  std::size_t label = 0;
  std::vector<float> probabilities;
};

// Inference-mode forward pass; label is the argmax, smallest index on ties.
Prediction predict(const Network& network, const nn::Tensor& sample);

std::size_t argmax(std::span<const float> values);

}  // namespace finclass::model
