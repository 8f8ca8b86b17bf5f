#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trojanscan/tensor.hpp"

namespace trojanscan {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Throws InputError unless 0 < beta < 1, eps > 0 and lr > 0.
  void validate() const;
};

/// First/second moment buffers, lazily sized on the first step.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update using each tensor's grad buffer.
/// Tensors without a grad buffer are left untouched (treated as frozen).
void adam_step(std::span<Tensor* const> params, AdamState& state, const AdamConfig& cfg);
void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg);

}  // namespace trojanscan
