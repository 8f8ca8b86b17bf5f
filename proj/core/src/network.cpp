#include "trojanscan/network.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>

#include "trojanscan/errors.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

constexpr std::size_t kNoParams = std::numeric_limits<std::size_t>::max();

ConstMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMap(t.data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace

Architecture mlp_architecture(std::size_t d_in, std::size_t hidden, std::size_t d_out) {
  return {Affine{d_in, hidden}, Relu{}, Affine{hidden, d_out}};
}

void validate_architecture(const Architecture& arch) {
  if (arch.empty()) throw ShapeError("architecture has no layers");
  if (!std::holds_alternative<Affine>(arch.front()) || !std::holds_alternative<Affine>(arch.back())) {
    throw ShapeError("architecture must start and end with an affine layer");
  }
  std::size_t width = 0;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    if (const auto* a = std::get_if<Affine>(&arch[i])) {
      if (a->in == 0 || a->out == 0) throw ShapeError("affine layer widths must be positive");
      if (width != 0 && a->in != width) {
        throw ShapeError("layer " + std::to_string(i) + " expects width " + std::to_string(a->in) +
                         " but receives " + std::to_string(width));
      }
      width = a->out;
    }
  }
}

Network::Network(Architecture arch) : arch_(std::move(arch)) {
  validate_architecture(arch_);
  param_offset_.assign(arch_.size(), kNoParams);
  for (std::size_t i = 0; i < arch_.size(); ++i) {
    if (const auto* a = std::get_if<Affine>(&arch_[i])) {
      param_offset_[i] = params_.size();
      params_.emplace_back(std::vector<std::size_t>{a->out, a->in});
      params_.emplace_back(std::vector<std::size_t>{a->out});
    }
  }
}

Network Network::initialized(Architecture arch, Rng& rng) {
  Network net(std::move(arch));
  for (std::size_t i = 0; i < net.arch_.size(); ++i) {
    const auto* a = std::get_if<Affine>(&net.arch_[i]);
    if (a == nullptr) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(a->in));
    for (auto& w : net.params_[net.param_offset_[i]].data) w = rng.uniform(-bound, bound);
    for (auto& b : net.params_[net.param_offset_[i] + 1].data) b = rng.uniform(-bound, bound);
  }
  return net;
}

std::size_t Network::input_width() const {
  if (arch_.empty()) throw StateError("network has no layers");
  return std::get<Affine>(arch_.front()).in;
}

std::size_t Network::output_width() const {
  if (arch_.empty()) throw StateError("network has no layers");
  return std::get<Affine>(arch_.back()).out;
}

std::vector<std::string> Network::param_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < arch_.size(); ++i) {
    if (std::holds_alternative<Affine>(arch_[i])) {
      names.push_back(std::to_string(i) + ".weight");
      names.push_back(std::to_string(i) + ".bias");
    }
  }
  return names;
}

std::size_t Network::weight_index(std::size_t layer) const {
  if (layer >= arch_.size() || param_offset_[layer] == kNoParams) {
    throw InputError("layer " + std::to_string(layer) + " has no parameters");
  }
  return param_offset_[layer];
}

Tensor Network::forward(const Tensor& batch) const {
  if (arch_.empty()) throw StateError("network has no layers");
  if (batch.cols() != input_width()) {
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " != network input width " +
                     std::to_string(input_width()));
  }
  const std::size_t n = batch.rows();
  RowMajor act = as_matrix(batch, n, batch.cols());
  for (std::size_t i = 0; i < arch_.size(); ++i) {
    if (const auto* a = std::get_if<Affine>(&arch_[i])) {
      const auto& w = params_[param_offset_[i]];
      const auto& b = params_[param_offset_[i] + 1];
      RowMajor next = act * as_matrix(w, a->out, a->in).transpose();
      next.rowwise() += ConstVecMap(b.data.data(), static_cast<Eigen::Index>(a->out));
      act = std::move(next);
    } else {
      act = act.cwiseMax(0.0);
    }
  }
  Tensor out({n, output_width()});
  Map(out.data.data(), act.rows(), act.cols()) = act;
  return out;
}

Tape Network::forward_recorded(const Tensor& batch) const {
  if (arch_.empty()) throw StateError("network has no layers");
  if (batch.cols() != input_width()) {
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " != network input width " +
                     std::to_string(input_width()));
  }
  Tape tape;
  tape.net_ = this;
  const std::size_t n = batch.rows();
  tape.activations_.reserve(arch_.size() + 1);
  tape.activations_.push_back(Tensor({n, batch.cols()}, batch.data));
  for (std::size_t i = 0; i < arch_.size(); ++i) {
    const Tensor& in = tape.activations_.back();
    const std::size_t in_w = in.cols();
    if (const auto* a = std::get_if<Affine>(&arch_[i])) {
      const auto& w = params_[param_offset_[i]];
      const auto& b = params_[param_offset_[i] + 1];
      Tensor out({n, a->out});
      Map y(out.data.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(a->out));
      y.noalias() = as_matrix(in, n, in_w) * as_matrix(w, a->out, a->in).transpose();
      y.rowwise() += ConstVecMap(b.data.data(), static_cast<Eigen::Index>(a->out));
      tape.activations_.push_back(std::move(out));
    } else {
      Tensor out({n, in_w});
      for (std::size_t j = 0; j < in.data.size(); ++j) out.data[j] = in.data[j] > 0.0 ? in.data[j] : 0.0;
      tape.activations_.push_back(std::move(out));
    }
  }
  return tape;
}

void Network::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Network::accumulate_grad(const Gradients& grads, double scale) {
  if (grads.params.size() != params_.size()) throw ShapeError("gradient list does not match parameters");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.grad) p.zero_grad();
    const auto& g = grads.params[i].data;
    if (g.size() != p.data.size()) throw ShapeError("gradient size mismatch for parameter " + std::to_string(i));
    for (std::size_t j = 0; j < g.size(); ++j) (*p.grad)[j] += scale * g[j];
  }
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

bool Network::all_finite() const noexcept {
  for (const auto& p : params_) {
    if (!p.all_finite()) return false;
  }
  return true;
}

const Tensor& Tape::logits() const {
  if (empty()) throw StateError("tape is empty; run forward_recorded first");
  return activations_.back();
}

Gradients Tape::backward(const Tensor& dlogits, bool with_param_grads) const {
  if (empty()) throw StateError("backward called without a recorded forward pass");
  const Network& net = *net_;
  const auto& arch = net.architecture();
  const std::size_t n = activations_.front().rows();
  if (dlogits.data.size() != activations_.back().data.size()) {
    throw ShapeError("upstream gradient does not match logits shape");
  }

  Gradients out;
  if (with_param_grads) {
    out.params.reserve(net.params().size());
    for (const auto& p : net.params()) out.params.emplace_back(p.shape);
  }

  RowMajor delta = as_matrix(dlogits, n, activations_.back().cols());
  for (std::size_t li = arch.size(); li-- > 0;) {
    const Tensor& in = activations_[li];
    if (const auto* a = std::get_if<Affine>(&arch[li])) {
      const std::size_t wi = net.weight_index(li);
      if (with_param_grads) {
        Map(out.params[wi].data.data(), static_cast<Eigen::Index>(a->out), static_cast<Eigen::Index>(a->in))
            .noalias() = delta.transpose() * as_matrix(in, n, a->in);
        Eigen::Map<Eigen::RowVectorXd>(out.params[wi + 1].data.data(), static_cast<Eigen::Index>(a->out)) =
            delta.colwise().sum();
      }
      RowMajor prev = delta * as_matrix(net.params()[wi], a->out, a->in);
      delta = std::move(prev);
    } else {
      // ReLU: pass gradient where the pre-activation was positive.
      const Tensor& pre = activations_[li];
      for (Eigen::Index r = 0; r < delta.rows(); ++r) {
        for (Eigen::Index c = 0; c < delta.cols(); ++c) {
          if (pre.data[static_cast<std::size_t>(r * delta.cols() + c)] <= 0.0) delta(r, c) = 0.0;
        }
      }
    }
  }
  out.input = Tensor({n, activations_.front().cols()});
  Map(out.input.data.data(), delta.rows(), delta.cols()) = delta;
  return out;
}

}  // namespace trojanscan
