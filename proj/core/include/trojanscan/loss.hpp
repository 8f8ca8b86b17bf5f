#pragma once

#include <span>
#include <vector>

#include "trojanscan/tensor.hpp"

namespace trojanscan {

/// Row-wise softmax, stabilized by subtracting each row's maximum.
[[nodiscard]] Tensor softmax_probs(const Tensor& logits);

/// Given softmax output `probs` and dL/dprobs, returns dL/dlogits.
[[nodiscard]] Tensor softmax_backward(const Tensor& probs, const Tensor& dprobs);

struct LossAndGrad {
  double value = 0.0;
  Tensor grad;  // d(value)/d(input), same shape as the input
};

/// Mean negative log-likelihood of the true class. Labels must lie in [0, cols).
[[nodiscard]] LossAndGrad cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

/// Mean binary cross-entropy of sigmoid(score) against {0,1} targets.
[[nodiscard]] LossAndGrad binary_cross_entropy_with_logits(std::span<const double> scores,
                                                           std::span<const int> targets);

[[nodiscard]] std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace trojanscan
