#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "trojanscan/tensor.hpp"

namespace trojanscan {

class Rng;

struct Affine {
  std::size_t in = 0;
  std::size_t out = 0;
  friend bool operator==(const Affine&, const Affine&) = default;
};

struct Relu {
  friend bool operator==(const Relu&, const Relu&) = default;
};

using Layer = std::variant<Affine, Relu>;
using Architecture = std::vector<Layer>;

/// d_in -> hidden -> ReLU -> d_out.
Architecture mlp_architecture(std::size_t d_in, std::size_t hidden, std::size_t d_out);

/// Throws ShapeError unless affine widths chain and the stack starts/ends with an affine layer.
void validate_architecture(const Architecture& arch);

class Tape;

/// Per-parameter gradients plus the gradient w.r.t. the input batch.
struct Gradients {
  std::vector<Tensor> params;  // same order as Network::params(); empty when not requested
  Tensor input;
};

/// Sequential MLP. Parameters are stored per affine layer as weight [out x in] and bias [out].
class Network {
 public:
  Network() = default;
  explicit Network(Architecture arch);

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every affine weight and bias.
  static Network initialized(Architecture arch, Rng& rng);

  [[nodiscard]] const Architecture& architecture() const noexcept { return arch_; }
  [[nodiscard]] std::size_t input_width() const;
  [[nodiscard]] std::size_t output_width() const;

  [[nodiscard]] std::vector<Tensor>& params() noexcept { return params_; }
  [[nodiscard]] const std::vector<Tensor>& params() const noexcept { return params_; }

  /// "<layer index>.weight" / "<layer index>.bias", parallel to params().
  [[nodiscard]] std::vector<std::string> param_names() const;

  /// Index into params() of the weight of the affine layer at `layer`.
  [[nodiscard]] std::size_t weight_index(std::size_t layer) const;

  /// Logits for an [n x d_in] batch, no recording.
  [[nodiscard]] Tensor forward(const Tensor& batch) const;

  /// Same as forward() but records every activation for a later backward pass.
  /// The returned tape refers to this network and must not outlive it.
  [[nodiscard]] Tape forward_recorded(const Tensor& batch) const;

  void zero_grad();

  /// params[i].grad += scale * grads.params[i]
  void accumulate_grad(const Gradients& grads, double scale = 1.0);

  [[nodiscard]] std::size_t parameter_count() const noexcept;
  [[nodiscard]] bool all_finite() const noexcept;

 private:
  Architecture arch_;
  std::vector<Tensor> params_;
  std::vector<std::size_t> param_offset_;  // per layer: index of weight in params_, or npos for ReLU
};

/// Recorded forward pass. Default-constructed tapes are empty and refuse backward().
class Tape {
 public:
  Tape() = default;

  [[nodiscard]] bool empty() const noexcept { return net_ == nullptr; }
  [[nodiscard]] const Tensor& logits() const;

  /// Backpropagates `dlogits` (same shape as logits) to parameters and input.
  [[nodiscard]] Gradients backward(const Tensor& dlogits, bool with_param_grads = true) const;

 private:
  friend class Network;
  const Network* net_ = nullptr;
  std::vector<Tensor> activations_;  // activations_[0] is the input, activations_[i+1] the output of layer i
};

}  // namespace trojanscan
