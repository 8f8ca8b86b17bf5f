#include "trojanscan/tensor.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "trojanscan/errors.hpp"

namespace trojanscan {

std::size_t shape_product(std::span<const std::size_t> shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_product(shape), 0.0) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
  }
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  for (auto dim : shape) {
    if (dim == 0) throw ShapeError("tensor dimensions must be positive");
  }
  if (shape_product(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape product " + std::to_string(shape_product(shape)));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape.size() == 1) return 1;
  if (shape.size() != 2) throw ShapeError("expected a rank-2 tensor");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() == 1) return shape[0];
  if (shape.size() != 2) throw ShapeError("expected a rank-2 tensor");
  return shape[1];
}

std::span<const double> Tensor::row(std::size_t r) const {
  const auto c = cols();
  return {data.data() + r * c, c};
}

std::span<double> Tensor::row(std::size_t r) {
  const auto c = cols();
  return {data.data() + r * c, c};
}

void Tensor::zero_grad() {
  if (grad) {
    std::fill(grad->begin(), grad->end(), 0.0);
  } else {
    grad.emplace(data.size(), 0.0);
  }
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace trojanscan
