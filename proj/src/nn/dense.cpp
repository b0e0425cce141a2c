#include "finclass/nn/layers.hpp"

namespace finclass::nn {

namespace {

template <typename T>
void check_dense(const BasicTensor<T>& input, const BasicTensor<T>& weights) {
  if (input.rank() != 1 || weights.rank() != 2 ||
      weights.dim(1) != input.size()) {
    throw InvalidShape("dense expects x [N] and W [M,N], got " +
                       to_string(input.shape()) + " and " +
                       to_string(weights.shape()));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input,
                             const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
  check_dense(input, weights);
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (bias.rank() != 1 || bias.size() != m) {
    throw InvalidShape("dense bias must have shape [" + std::to_string(m) + "]");
  }
  BasicTensor<T> out({m});
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = weights.data().data() + i * n;
    T acc = bias[i];
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * input[j];
    out[i] = acc;
  }
  return out;
}

template <typename T>
DenseGradients<T> dense_backward(const BasicTensor<T>& input,
                                 const BasicTensor<T>& weights,
                                 const BasicTensor<T>& grad_output) {
  check_dense(input, weights);
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (grad_output.rank() != 1 || grad_output.size() != m) {
    throw InvalidShape("dense upstream gradient must have shape [" +
                       std::to_string(m) + "]");
  }
  DenseGradients<T> grads{BasicTensor<T>({n}), BasicTensor<T>(weights.shape()),
                          grad_output};
  T* __restrict dx = grads.input.data().data();
  T* __restrict dw = grads.weights.data().data();
  const T* __restrict x = input.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const T g = grad_output[i];
    const T* row = weights.data().data() + i * n;
    T* drow = dw + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      dx[j] += row[j] * g;
      drow[j] = g * x[j];
    }
  }
  return grads;
}

template BasicTensor<float> dense_forward(const BasicTensor<float>&,
                                          const BasicTensor<float>&,
                                          const BasicTensor<float>&);
template BasicTensor<double> dense_forward(const BasicTensor<double>&,
                                           const BasicTensor<double>&,
                                           const BasicTensor<double>&);
template DenseGradients<float> dense_backward(const BasicTensor<float>&,
                                              const BasicTensor<float>&,
                                              const BasicTensor<float>&);
template DenseGradients<double> dense_backward(const BasicTensor<double>&,
                                               const BasicTensor<double>&,
                                               const BasicTensor<double>&);

}  // namespace finclass::nn
