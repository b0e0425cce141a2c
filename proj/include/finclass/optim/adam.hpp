#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "finclass/nn/tensor.hpp"

namespace finclass::optim {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moments mirror the parameter list; they are allocated on the first step.
template <typename T>
struct BasicAdamState {
  AdamHyper hyper;
  std::uint64_t t = 0;
  std::vector<nn::BasicTensor<T>> m;
  std::vector<nn::BasicTensor<T>> v;
};

using AdamState = BasicAdamState<float>;

// One bias-corrected Adam update of every parameter. Throws InvalidInput if
// the gradient list or any shape does not match the parameters.
template <typename T>
void adam_step(std::span<nn::BasicTensor<T>* const> params,
               std::span<const nn::BasicTensor<T>> grads,
               BasicAdamState<T>& state);

}  // namespace finclass::optim
