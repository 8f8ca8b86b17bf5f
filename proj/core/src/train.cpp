#include "trojanscan/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "trojanscan/errors.hpp"
#include "trojanscan/loss.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {

void TrainConfig::validate() const {
  if (batch_size == 0) throw InputError("batch_size must be positive");
  adam.validate();
}

double dataset_loss(const Network& net, const Dataset& data) {
  return cross_entropy_loss(net.forward(data.inputs), data.labels).value;
}

double accuracy(const Network& net, const Dataset& data) {
  if (data.size() == 0) throw InputError("accuracy of an empty dataset");
  const auto pred = argmax_rows(net.forward(data.inputs));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

TrainResult train_task_model(const Dataset& data, const Architecture& arch, const TrainConfig& cfg,
                             const BatchObjective& extra) {
  cfg.validate();
  if (data.size() == 0) throw InputError("cannot train on an empty dataset");
  validate_architecture(arch);

  Rng init_rng = Rng::stream(cfg.seed, "init");
  Rng shuffle_rng = Rng::stream(cfg.seed, "shuffle");

  TrainResult result;
  result.net = Network::initialized(arch, init_rng);
  Network& net = result.net;
  if (data.dim() != net.input_width()) throw ShapeError("dataset width does not match architecture input");
  if (data.classes != net.output_width()) throw ShapeError("dataset class count does not match architecture output");
  data.validate();

  result.initial_loss = dataset_loss(net, data);

  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  AdamState adam;
  std::vector<Tensor*> params;
  for (auto& p : net.params()) params.push_back(&p);

  Tensor batch;
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t bs = std::min(cfg.batch_size, n - start);
      batch = Tensor({bs, d});
      labels.resize(bs);
      for (std::size_t b = 0; b < bs; ++b) {
        const auto src = data.inputs.row(order[start + b]);
        std::copy(src.begin(), src.end(), batch.row(b).begin());
        labels[b] = data.labels[order[start + b]];
      }

      const Tape tape = net.forward_recorded(batch);
      auto loss = cross_entropy_loss(tape.logits(), labels);
      net.zero_grad();
      net.accumulate_grad(tape.backward(loss.grad));
      double objective = loss.value;
      if (extra) objective += extra(net);
      if (!std::isfinite(objective)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      adam_step(std::span<Tensor* const>(params), adam, cfg.adam);
      epoch_sum += objective;
      ++batches;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }
  for (auto& p : net.params()) p.grad.reset();
  if (!net.all_finite()) throw DivergenceError("training produced non-finite parameters");

  result.final_loss = dataset_loss(net, data);
  result.train_accuracy = accuracy(net, data);
  return result;
}

}  // namespace trojanscan
