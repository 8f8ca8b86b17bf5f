#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "trojanscan/dataset.hpp"
#include "trojanscan/network.hpp"
#include "trojanscan/rng.hpp"
#include "trojanscan/zoo.hpp"

namespace fixtures {

using namespace trojanscan;

inline Network random_net(std::uint64_t seed, std::size_t d_in, std::size_t hidden, std::size_t d_out) {
  Rng rng(seed);
  return Network::initialized(mlp_architecture(d_in, hidden, d_out), rng);
}

inline Tensor random_batch(std::uint64_t seed, std::size_t rows, std::size_t cols, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t({rows, cols});
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// A small defender zoo on a 6x6 grid task, cheap enough for unit tests.
inline std::vector<ShadowRecord> toy_zoo(std::size_t benign, std::size_t trojan, std::uint64_t seed = 7,
                                         std::size_t epochs = 20) {
  SyntheticTask task(seed, 36, 3, 0.1);
  const Dataset data = task.sample(seed + 1, 96);
  ZooSpec spec;
  spec.count_benign = benign;
  spec.count_trojan = trojan;
  spec.base_seed = seed;
  spec.train.epochs = epochs;
  spec.hidden = 8;
  spec.holdout_size = 64;
  return generate_zoo(task, data, spec);
}

}  // namespace fixtures
