#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "trojanscan/tensor.hpp"

namespace trojanscan {

/// Inputs in [0,1]^{d_x} with integer labels in [0, classes).
struct Dataset {
  Tensor inputs;            // [n x d_x]
  std::vector<int> labels;  // n
  std::size_t classes = 0;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::size_t dim() const { return inputs.cols(); }

  /// Throws InputError/ShapeError if any invariant is violated.
  void validate() const;

  /// Rows `indices`, in the given order.
  [[nodiscard]] Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// A c-class task over a sqrt(d_x) x sqrt(d_x) grid: fixed class prototypes plus Gaussian noise.
class SyntheticTask {
 public:
  SyntheticTask(std::uint64_t task_seed, std::size_t d_x, std::size_t classes, double noise_sigma);

  [[nodiscard]] std::size_t dim() const noexcept { return d_x_; }
  [[nodiscard]] std::size_t classes() const noexcept { return classes_; }
  [[nodiscard]] std::size_t grid_side() const noexcept { return side_; }
  [[nodiscard]] double noise_sigma() const noexcept { return sigma_; }
  [[nodiscard]] const Tensor& prototypes() const noexcept { return prototypes_; }

  /// n balanced instances (label i mod c), each its prototype plus noise clamped to [0,1].
  [[nodiscard]] Dataset sample(std::uint64_t sample_seed, std::size_t n) const;

 private:
  std::size_t d_x_;
  std::size_t classes_;
  std::size_t side_;
  double sigma_;
  Tensor prototypes_;  // [classes x d_x]
};

/// One-shot helper: prototypes and samples both drawn from `seed`.
[[nodiscard]] Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t d_x, std::size_t classes,
                                    double noise_sigma);

}  // namespace trojanscan
