#include "trojanscan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trojanscan/errors.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {

void Dataset::validate() const {
  if (labels.empty()) throw InputError("dataset is empty");
  if (classes < 2) throw InputError("dataset needs at least two classes");
  if (inputs.rows() != labels.size()) throw ShapeError("dataset inputs and labels disagree on n");
  for (double v : inputs.data) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("dataset input outside [0,1]");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InputError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  const std::size_t d = dim();
  Dataset out;
  out.classes = classes;
  out.labels.reserve(indices.size());
  std::vector<double> data;
  data.reserve(indices.size() * d);
  for (auto i : indices) {
    if (i >= size()) throw InputError("subset index out of range");
    auto row = inputs.row(i);
    data.insert(data.end(), row.begin(), row.end());
    out.labels.push_back(labels[i]);
  }
  out.inputs = Tensor::matrix(indices.size(), d, std::move(data));
  return out;
}

SyntheticTask::SyntheticTask(std::uint64_t task_seed, std::size_t d_x, std::size_t classes, double noise_sigma)
    : d_x_(d_x), classes_(classes), side_(0), sigma_(noise_sigma) {
  if (classes < 2) throw InputError("synthetic task needs at least two classes");
  if (d_x == 0) throw InputError("input dimension must be positive");
  side_ = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d_x))));
  if (side_ * side_ != d_x) throw InputError("d_x must be a perfect square, got " + std::to_string(d_x));
  if (!(noise_sigma >= 0.0)) throw InputError("noise_sigma must be non-negative");

  Rng rng = Rng::stream(task_seed, "prototypes");
  prototypes_ = Tensor({classes, d_x});
  for (auto& v : prototypes_.data) v = rng.uniform();
}

Dataset SyntheticTask::sample(std::uint64_t sample_seed, std::size_t n) const {
  if (n == 0) throw InputError("cannot sample an empty dataset");
  Rng rng = Rng::stream(sample_seed, "samples");
  Dataset out;
  out.classes = classes_;
  out.labels.resize(n);
  out.inputs = Tensor({n, d_x_});
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = i % classes_;
    out.labels[i] = static_cast<int>(y);
    auto proto = prototypes_.row(y);
    auto row = out.inputs.row(i);
    for (std::size_t j = 0; j < d_x_; ++j) {
      const double noise = sigma_ > 0.0 ? rng.normal(0.0, sigma_) : 0.0;
      row[j] = std::clamp(proto[j] + noise, 0.0, 1.0);
    }
  }
  return out;
}

Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t d_x, std::size_t classes, double noise_sigma) {
  return SyntheticTask(seed, d_x, classes, noise_sigma).sample(seed, n);
}

}  // namespace trojanscan
