#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "finclass/nn/tensor.hpp"

// Differentiable layer kernels. Every kernel is available for float (the
// training precision) and double (used by gradient checks).
namespace finclass::nn {

// ---------------------------------------------------------------------------
// Convolution (stride 1). Input [H, W, Cin], filters [K, K, Cin, F], bias [F].

enum class Padding { kValid, kSame };

template <typename T>
struct ConvParams {
  BasicTensor<T> filters;
  BasicTensor<T> bias;
  Padding padding = Padding::kValid;
};

// Throws InvalidShape on rank/depth mismatch, even K with same padding, or
// an input smaller than the kernel under valid padding.
Shape conv2d_output_shape(const Shape& input, const Shape& filters,
                          Padding padding);

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const ConvParams<T>& params);

template <typename T>
struct ConvGradients {
  BasicTensor<T> input;  // empty when not requested
  BasicTensor<T> filters;
  BasicTensor<T> bias;
};

// Gradients given dLoss/dOutput. The filter gradient sums the contribution
// of every output position, since one filter is shared across all of them.
template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& input,
                                 const ConvParams<T>& params,
                                 const BasicTensor<T>& grad_output,
                                 bool want_input_grad = true);

// ---------------------------------------------------------------------------
// Max pooling over [H, W, C]. Output extent floor((H - window) / stride) + 1;
// trailing rows/columns that do not fill a window are dropped.

struct PoolParams {
  std::size_t window = 2;
  std::size_t stride = 2;
};

Shape maxpool_output_shape(const Shape& input, PoolParams params);

template <typename T>
struct PoolForward {
  BasicTensor<T> output;
  // Flat input index of each output's maximum (first occurrence on ties).
  std::vector<std::size_t> argmax;
};

template <typename T>
PoolForward<T> maxpool_forward(const BasicTensor<T>& input, PoolParams params);

template <typename T>
BasicTensor<T> maxpool_backward(const Shape& input_shape,
                                std::span<const std::size_t> argmax,
                                const BasicTensor<T>& grad_output);

// ---------------------------------------------------------------------------
// Fully connected: a = W x + b with W [M, N], x [N], b [M].

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input,
                             const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <typename T>
struct DenseGradients {
  BasicTensor<T> input;    // W^T g
  BasicTensor<T> weights;  // g x^T
  BasicTensor<T> bias;     // g
};

template <typename T>
DenseGradients<T> dense_backward(const BasicTensor<T>& input,
                                 const BasicTensor<T>& weights,
                                 const BasicTensor<T>& grad_output);

// ---------------------------------------------------------------------------
// Activations.

enum class Activation { kRelu, kTanh, kSigmoid, kSoftmax };

// Throws InvalidParameter for an unknown name.
Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation kind);

// Elementwise kinds accept any rank; softmax requires a rank-1 tensor.
template <typename T>
BasicTensor<T> activation_forward(Activation kind, const BasicTensor<T>& input);

// `output` is the forward result for `input`.
template <typename T>
BasicTensor<T> activation_backward(Activation kind, const BasicTensor<T>& input,
                                   const BasicTensor<T>& output,
                                   const BasicTensor<T>& grad_output);

// Softmax applied independently to every fiber along the last axis, so a
// [H, W, C] map is normalized over C at each position.
template <typename T>
BasicTensor<T> softmax_last_axis(const BasicTensor<T>& input);
template <typename T>
BasicTensor<T> softmax_last_axis_backward(const BasicTensor<T>& output,
                                          const BasicTensor<T>& grad_output);

// ---------------------------------------------------------------------------
// Inverted dropout.

struct DropoutState {
  double keep_prob = 0.8;
  std::uint64_t rng_seed = 0;
  std::uint64_t step_counter = 0;
};

// Keep flags (1 = kept) for n elements. Element i is kept iff the i-th
// 53-bit uniform drawn from mt19937_64 seeded with
// seed_seq{seed lo/hi words, counter lo/hi words} is below keep_prob.
std::vector<std::uint8_t> dropout_mask(std::size_t n, const DropoutState& state);

template <typename T>
struct DropoutForward {
  BasicTensor<T> output;
  std::vector<std::uint8_t> mask;  // empty in inference mode
};

// Inference is the identity; training keeps with probability keep_prob and
// scales survivors by 1 / keep_prob.
template <typename T>
DropoutForward<T> dropout_forward(const BasicTensor<T>& input,
                                  const DropoutState& state, bool training);

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_output,
                                std::span<const std::uint8_t> mask,
                                double keep_prob);

// ---------------------------------------------------------------------------
// Softmax cross-entropy on logits.
//
// kTwoTerm:     -sum_i [t_i log y_i + (1 - t_i) log(1 - y_i)]
// kCategorical: -sum_i t_i log y_i
// with y = softmax(logits) clamped to [kProbabilityClamp, 1 - kProbabilityClamp].
// Evaluated in double regardless of T.

enum class LossForm { kTwoTerm, kCategorical };

inline constexpr double kProbabilityClamp = 1e-12;

LossForm parse_loss_form(std::string_view name);
std::string_view loss_form_name(LossForm form);

// Throws InvalidInput unless target is one-hot with the logits' length >= 2.
template <typename T>
double softmax_cross_entropy_loss(const BasicTensor<T>& logits,
                                  const BasicTensor<T>& target,
                                  LossForm form = LossForm::kTwoTerm);

template <typename T>
BasicTensor<T> softmax_cross_entropy_grad(const BasicTensor<T>& logits,
                                          const BasicTensor<T>& target,
                                          LossForm form = LossForm::kTwoTerm);

}  // namespace finclass::nn
