#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "trojanscan/adam.hpp"
#include "trojanscan/dataset.hpp"
#include "trojanscan/network.hpp"

namespace trojanscan {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Extra differentiable term added to every mini-batch objective. It must add its
/// (already weighted) gradient into the network's grad buffers and return its value.
using BatchObjective = std::function<double(Network&)>;

struct TrainResult {
  Network net;
  double initial_loss = 0.0;  // full-dataset cross-entropy at initialization
  double final_loss = 0.0;    // full-dataset cross-entropy after training
  double train_accuracy = 0.0;
  std::vector<double> epoch_loss;  // mean mini-batch objective per epoch
};

/// Mini-batch Adam on mean cross-entropy. Initialization and shuffling come from
/// labelled streams of cfg.seed, so identical inputs give bit-identical parameters.
[[nodiscard]] TrainResult train_task_model(const Dataset& data, const Architecture& arch, const TrainConfig& cfg,
                                           const BatchObjective& extra = {});

[[nodiscard]] double dataset_loss(const Network& net, const Dataset& data);
[[nodiscard]] double accuracy(const Network& net, const Dataset& data);

}  // namespace trojanscan
