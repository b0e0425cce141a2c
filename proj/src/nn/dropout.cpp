#include <random>
#include <string>

#include "finclass/nn/layers.hpp"

namespace finclass::nn {

namespace {

void check_keep(double keep_prob) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw InvalidParameter("dropout keep_prob must lie in (0, 1], got " +
                           std::to_string(keep_prob));
  }
}

}  // namespace

std::vector<std::uint8_t> dropout_mask(std::size_t n, const DropoutState& state) {
  check_keep(state.keep_prob);
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(state.rng_seed), hi(state.rng_seed),
                    lo(state.step_counter), hi(state.step_counter)};
  std::mt19937_64 gen(seq);
  std::vector<std::uint8_t> mask(n);
  for (auto& m : mask) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    m = u < state.keep_prob ? 1 : 0;
  }
  return mask;
}

template <typename T>
DropoutForward<T> dropout_forward(const BasicTensor<T>& input,
                                  const DropoutState& state, bool training) {
  check_keep(state.keep_prob);
  if (!training) return {input, {}};
  DropoutForward<T> result{BasicTensor<T>(input.shape()),
                           dropout_mask(input.size(), state)};
  const T scale = static_cast<T>(1.0 / state.keep_prob);
  for (std::size_t i = 0; i < input.size(); ++i) {
    result.output[i] = result.mask[i] ? input[i] * scale : T{0};
  }
  return result;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_output,
                                std::span<const std::uint8_t> mask,
                                double keep_prob) {
  check_keep(keep_prob);
  if (mask.empty()) return grad_output;
  if (mask.size() != grad_output.size()) {
    throw InvalidShape("dropout mask does not match gradient size");
  }
  BasicTensor<T> grad(grad_output.shape());
  const T scale = static_cast<T>(1.0 / keep_prob);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = mask[i] ? grad_output[i] * scale : T{0};
  }
  return grad;
}

template DropoutForward<float> dropout_forward(const BasicTensor<float>&,
                                               const DropoutState&, bool);
template DropoutForward<double> dropout_forward(const BasicTensor<double>&,
                                                const DropoutState&, bool);
template BasicTensor<float> dropout_backward(const BasicTensor<float>&,
                                             std::span<const std::uint8_t>, double);
template BasicTensor<double> dropout_backward(const BasicTensor<double>&,
                                              std::span<const std::uint8_t>, double);

}  // namespace finclass::nn
