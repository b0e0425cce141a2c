#include "finclass/optim/adam.hpp"

#include <cmath>
#include <string>

#include "finclass/error.hpp"

namespace finclass::optim {

template <typename T>
void adam_step(std::span<nn::BasicTensor<T>* const> params,
               std::span<const nn::BasicTensor<T>> grads,
               BasicAdamState<T>& state) {
  if (params.size() != grads.size()) {
    throw InvalidInput("adam: " + std::to_string(grads.size()) +
                       " gradients for " + std::to_string(params.size()) +
                       " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      throw InvalidInput("adam: gradient " + std::to_string(i) + " has shape " +
                         nn::to_string(grads[i].shape()) + ", parameter has " +
                         nn::to_string(params[i]->shape()));
    }
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  } else if (state.m.size() != params.size()) {
    throw InvalidInput("adam: state tracks a different parameter list");
  }

  const AdamHyper& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    if (m.size() != theta.size()) {
      throw InvalidInput("adam: state tracks a different parameter list");
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g[j];
      const double mj = h.beta1 * m[j] + (1.0 - h.beta1) * gj;
      const double vj = h.beta2 * v[j] + (1.0 - h.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / c1;
      const double v_hat = vj / c2;
      theta[j] = static_cast<T>(theta[j] -
                                h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon));
    }
  }
}

template void adam_step(std::span<nn::BasicTensor<float>* const>,
                        std::span<const nn::BasicTensor<float>>,
                        BasicAdamState<float>&);
template void adam_step(std::span<nn::BasicTensor<double>* const>,
                        std::span<const nn::BasicTensor<double>>,
                        BasicAdamState<double>&);

}  // namespace finclass::optim
