#include <algorithm>
#include <cmath>
#include <string>

#include "finclass/nn/layers.hpp"

namespace finclass::nn {

LossForm parse_loss_form(std::string_view name) {
  if (name == "two_term") return LossForm::kTwoTerm;
  if (name == "categorical") return LossForm::kCategorical;
  throw InvalidParameter("unknown loss form '" + std::string(name) +
                         "' (expected two_term or categorical)");
}

std::string_view loss_form_name(LossForm form) {
  return form == LossForm::kTwoTerm ? "two_term" : "categorical";
}

namespace {

template <typename T>
void check_target(const BasicTensor<T>& logits, const BasicTensor<T>& target) {
  if (logits.rank() != 1 || logits.size() < 2) {
    throw InvalidInput("cross-entropy needs rank-1 logits with K >= 2");
  }
  if (target.shape() != logits.shape()) {
    throw InvalidInput("cross-entropy target shape " + to_string(target.shape()) +
                       " does not match logits " + to_string(logits.shape()));
  }
  std::size_t ones = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == T{1}) {
      ++ones;
    } else if (target[i] != T{0}) {
      throw InvalidInput("cross-entropy target is not one-hot");
    }
  }
  if (ones != 1) throw InvalidInput("cross-entropy target is not one-hot");
}

template <typename T>
std::vector<double> probabilities(const BasicTensor<T>& logits) {
  std::vector<double> y(logits.size());
  double peak = logits[0];
  for (std::size_t i = 1; i < y.size(); ++i) peak = std::max<double>(peak, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = std::exp(static_cast<double>(logits[i]) - peak);
    sum += y[i];
  }
  for (auto& v : y) v /= sum;
  return y;
}

constexpr double kLo = kProbabilityClamp;
constexpr double kHi = 1.0 - kProbabilityClamp;

}  // namespace

template <typename T>
double softmax_cross_entropy_loss(const BasicTensor<T>& logits,
                                  const BasicTensor<T>& target, LossForm form) {
  check_target(logits, target);
  const auto y = probabilities(logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = std::clamp(y[i], kLo, kHi);
    const double t = static_cast<double>(target[i]);
    loss -= t * std::log(p);
    if (form == LossForm::kTwoTerm) loss -= (1.0 - t) * std::log(1.0 - p);
  }
  return loss;
}

template <typename T>
BasicTensor<T> softmax_cross_entropy_grad(const BasicTensor<T>& logits,
                                          const BasicTensor<T>& target,
                                          LossForm form) {
  check_target(logits, target);
  const auto y = probabilities(logits);
  const std::size_t k = y.size();

  // dLoss/dy, zero where the clamp is active.
  std::vector<double> dy(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (y[i] < kLo || y[i] > kHi) continue;
    const double t = static_cast<double>(target[i]);
    dy[i] = -t / y[i];
    if (form == LossForm::kTwoTerm) dy[i] += (1.0 - t) / (1.0 - y[i]);
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < k; ++i) dot += dy[i] * y[i];
  BasicTensor<T> grad({k});
  for (std::size_t j = 0; j < k; ++j) {
    grad[j] = static_cast<T>(y[j] * (dy[j] - dot));
  }
  return grad;
}

template double softmax_cross_entropy_loss(const BasicTensor<float>&,
                                           const BasicTensor<float>&, LossForm);
template double softmax_cross_entropy_loss(const BasicTensor<double>&,
                                           const BasicTensor<double>&, LossForm);
template BasicTensor<float> softmax_cross_entropy_grad(const BasicTensor<float>&,
                                                       const BasicTensor<float>&,
                                                       LossForm);
template BasicTensor<double> softmax_cross_entropy_grad(const BasicTensor<double>&,
                                                        const BasicTensor<double>&,
                                                        LossForm);

}  // namespace finclass::nn
