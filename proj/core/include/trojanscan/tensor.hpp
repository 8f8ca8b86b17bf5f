#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace trojanscan {

/// Dense row-major array of doubles with an optional gradient buffer.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::optional<std::vector<double>> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
  [[nodiscard]] std::size_t rank() const noexcept { return shape.size(); }

  // 2-D accessors; rank-1 tensors are treated as a single row.
  [[nodiscard]] std::size_t rows() const;
  [[nodiscard]] std::size_t cols() const;

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  [[nodiscard]] std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);

  /// Allocates (or clears) the gradient buffer.
  void zero_grad();

  [[nodiscard]] bool all_finite() const noexcept;
};

[[nodiscard]] std::size_t shape_product(std::span<const std::size_t> shape) noexcept;

}  // namespace trojanscan
