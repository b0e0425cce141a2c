#include <cmath>
#include <string>

#include "finclass/nn/layers.hpp"

namespace finclass::nn {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softmax") return Activation::kSoftmax;
  throw InvalidParameter("unknown activation '" + std::string(name) +
                         "' (expected relu, tanh, sigmoid or softmax)");
}

std::string_view activation_name(Activation kind) {
  switch (kind) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
  }
  throw InvalidParameter("unknown activation kind");
}

namespace {

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
void softmax_fiber(const T* in, T* out, std::size_t n) {
  T peak = in[0];
  for (std::size_t i = 1; i < n; ++i) peak = std::max(peak, in[i]);
  T sum{0};
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - peak);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

// g_in = y * (g - <g, y>)
template <typename T>
void softmax_fiber_backward(const T* y, const T* g, T* out, std::size_t n) {
  T dot{0};
  for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] * (g[i] - dot);
}

}  // namespace

template <typename T>
BasicTensor<T> softmax_last_axis(const BasicTensor<T>& input) {
  if (input.rank() == 0 || input.size() == 0) {
    throw InvalidShape("softmax on an empty tensor");
  }
  const std::size_t n = input.shape().back();
  BasicTensor<T> out(input.shape());
  for (std::size_t off = 0; off < input.size(); off += n) {
    softmax_fiber(input.data().data() + off, out.data().data() + off, n);
  }
  return out;
}

template <typename T>
BasicTensor<T> softmax_last_axis_backward(const BasicTensor<T>& output,
                                          const BasicTensor<T>& grad_output) {
  if (output.shape() != grad_output.shape() || output.rank() == 0) {
    throw InvalidShape("softmax backward shape mismatch");
  }
  const std::size_t n = output.shape().back();
  BasicTensor<T> grad(output.shape());
  for (std::size_t off = 0; off < output.size(); off += n) {
    softmax_fiber_backward(output.data().data() + off,
                           grad_output.data().data() + off,
                           grad.data().data() + off, n);
  }
  return grad;
}

template <typename T>
BasicTensor<T> activation_forward(Activation kind, const BasicTensor<T>& input) {
  if (kind == Activation::kSoftmax) {
    if (input.rank() != 1) {
      throw InvalidShape("softmax activation needs a rank-1 tensor, got " +
                         to_string(input.shape()));
    }
    return softmax_last_axis(input);
  }
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const T x = input[i];
    switch (kind) {
      case Activation::kRelu: out[i] = x > T{0} ? x : T{0}; break;
      case Activation::kTanh: out[i] = std::tanh(x); break;
      case Activation::kSigmoid: out[i] = sigmoid(x); break;
      case Activation::kSoftmax: break;
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> activation_backward(Activation kind, const BasicTensor<T>& input,
                                   const BasicTensor<T>& output,
                                   const BasicTensor<T>& grad_output) {
  if (input.shape() != output.shape() || input.shape() != grad_output.shape()) {
    throw InvalidShape("activation backward shape mismatch");
  }
  if (kind == Activation::kSoftmax) {
    if (input.rank() != 1) {
      throw InvalidShape("softmax activation needs a rank-1 tensor");
    }
    return softmax_last_axis_backward(output, grad_output);
  }
  BasicTensor<T> grad(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const T g = grad_output[i];
    const T y = output[i];
    switch (kind) {
      case Activation::kRelu: grad[i] = input[i] > T{0} ? g : T{0}; break;
      case Activation::kTanh: grad[i] = g * (T{1} - y * y); break;
      case Activation::kSigmoid: grad[i] = g * y * (T{1} - y); break;
      case Activation::kSoftmax: break;
    }
  }
  return grad;
}

#define FINCLASS_INSTANTIATE(T)                                                 \
  template BasicTensor<T> softmax_last_axis(const BasicTensor<T>&);             \
  template BasicTensor<T> softmax_last_axis_backward(const BasicTensor<T>&,     \
                                                     const BasicTensor<T>&);    \
  template BasicTensor<T> activation_forward(Activation, const BasicTensor<T>&); \
  template BasicTensor<T> activation_backward(                                  \
      Activation, const BasicTensor<T>&, const BasicTensor<T>&,                 \
      const BasicTensor<T>&);

FINCLASS_INSTANTIATE(float)
FINCLASS_INSTANTIATE(double)
#undef FINCLASS_INSTANTIATE

}  // namespace finclass::nn
