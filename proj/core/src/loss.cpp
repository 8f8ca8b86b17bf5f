#include "trojanscan/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trojanscan/errors.hpp"

namespace trojanscan {

Tensor softmax_probs(const Tensor& logits) {
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  Tensor out({n, c});
  for (std::size_t r = 0; r < n; ++r) {
    auto in = logits.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (auto& v : o) v /= sum;
  }
  return out;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& dprobs) {
  if (probs.data.size() != dprobs.data.size()) throw ShapeError("softmax_backward: shape mismatch");
  const std::size_t n = probs.rows();
  const std::size_t c = probs.cols();
  Tensor out({n, c});
  for (std::size_t r = 0; r < n; ++r) {
    auto p = probs.row(r);
    auto g = dprobs.row(r);
    double dot = 0.0;
    for (std::size_t j = 0; j < c; ++j) dot += p[j] * g[j];
    auto o = out.row(r);
    for (std::size_t j = 0; j < c; ++j) o[j] = p[j] * (g[j] - dot);
  }
  return out;
}

LossAndGrad cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  if (labels.size() != n) throw ShapeError("label count does not match logits rows");
  LossAndGrad result{0.0, softmax_probs(logits)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw InputError("label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
    }
    auto in = logits.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - mx);
    result.value += (mx + std::log(sum) - in[static_cast<std::size_t>(y)]) * inv_n;

    auto g = result.grad.row(r);
    g[static_cast<std::size_t>(y)] -= 1.0;
    for (auto& v : g) v *= inv_n;
  }
  return result;
}

LossAndGrad binary_cross_entropy_with_logits(std::span<const double> scores, std::span<const int> targets) {
  if (scores.size() != targets.size() || scores.empty()) throw ShapeError("BCE: score/target size mismatch");
  const std::size_t n = scores.size();
  LossAndGrad result{0.0, Tensor({n})};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scores[i];
    const double y = targets[i] != 0 ? 1.0 : 0.0;
    // log(1 + exp(-|s|)) + max(s, 0) - y*s
    result.value += (std::max(s, 0.0) - y * s + std::log1p(std::exp(-std::abs(s)))) * inv_n;
    const double sig = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
    result.grad.data[i] = (sig - y) * inv_n;
  }
  return result;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const std::size_t n = logits.rows();
  std::vector<int> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace trojanscan
