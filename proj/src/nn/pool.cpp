#include "finclass/nn/layers.hpp"

namespace finclass::nn {

Shape maxpool_output_shape(const Shape& input, PoolParams params) {
  if (input.size() != 3) {
    throw InvalidShape("maxpool expects [H,W,C], got " + to_string(input));
  }
  if (params.window == 0 || params.stride == 0) {
    throw InvalidShape("maxpool window and stride must be >= 1");
  }
  if (params.window > input[0] || params.window > input[1]) {
    throw InvalidShape("maxpool window " + std::to_string(params.window) +
                       " larger than input " + to_string(input));
  }
  return {(input[0] - params.window) / params.stride + 1,
          (input[1] - params.window) / params.stride + 1, input[2]};
}

template <typename T>
PoolForward<T> maxpool_forward(const BasicTensor<T>& input, PoolParams params) {
  const Shape out_shape = maxpool_output_shape(input.shape(), params);
  PoolForward<T> result{BasicTensor<T>(out_shape),
                        std::vector<std::size_t>(element_count(out_shape))};
  const std::size_t w = input.dim(1), channels = input.dim(2);
  std::size_t o = 0;
  for (std::size_t oy = 0; oy < out_shape[0]; ++oy) {
    for (std::size_t ox = 0; ox < out_shape[1]; ++ox) {
      for (std::size_t c = 0; c < channels; ++c, ++o) {
        const std::size_t y0 = oy * params.stride, x0 = ox * params.stride;
        std::size_t best = (y0 * w + x0) * channels + c;
        for (std::size_t y = y0; y < y0 + params.window; ++y) {
          for (std::size_t x = x0; x < x0 + params.window; ++x) {
            const std::size_t idx = (y * w + x) * channels + c;
            if (input[idx] > input[best]) best = idx;
          }
        }
        result.output[o] = input[best];
        result.argmax[o] = best;
      }
    }
  }
  return result;
}

template <typename T>
BasicTensor<T> maxpool_backward(const Shape& input_shape,
                                std::span<const std::size_t> argmax,
                                const BasicTensor<T>& grad_output) {
  if (argmax.size() != grad_output.size()) {
    throw InvalidShape("maxpool upstream gradient does not match argmax table");
  }
  BasicTensor<T> grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    grad[argmax[i]] += grad_output[i];
  }
  return grad;
}

template PoolForward<float> maxpool_forward(const BasicTensor<float>&, PoolParams);
template PoolForward<double> maxpool_forward(const BasicTensor<double>&, PoolParams);
template BasicTensor<float> maxpool_backward(const Shape&, std::span<const std::size_t>,
                                             const BasicTensor<float>&);
template BasicTensor<double> maxpool_backward(const Shape&, std::span<const std::size_t>,
                                              const BasicTensor<double>&);

}  // namespace finclass::nn
