#include "trojanscan/adam.hpp"

#include <cmath>

#include "trojanscan/errors.hpp"

namespace trojanscan {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InputError("adam beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InputError("adam beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw InputError("adam eps must be positive");
}

void adam_step(std::span<Tensor* const> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw StateError("adam state was built for a different parameter list");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.grad) continue;
    const auto& g = *p.grad;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) throw StateError("adam moment size mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p.data[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg) {
  std::vector<Tensor*> ptrs;
  ptrs.reserve(params.size());
  for (auto& p : params) ptrs.push_back(&p);
  adam_step(std::span<Tensor* const>(ptrs), state, cfg);
}

}  // namespace trojanscan
