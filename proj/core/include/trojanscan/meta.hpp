#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "trojanscan/adam.hpp"
#include "trojanscan/network.hpp"
#include "trojanscan/tensor.hpp"
#include "trojanscan/zoo.hpp"

namespace trojanscan {

class Rng;

/// Black-box view of a classifier: class probabilities for a batch of inputs, nothing else.
class QueryableModel {
 public:
  virtual ~QueryableModel() = default;
  [[nodiscard]] virtual Tensor query(const Tensor& inputs) const = 0;
  [[nodiscard]] virtual std::size_t input_width() const = 0;
  [[nodiscard]] virtual std::size_t output_width() const = 0;
};

/// Exposes a Network through the forward-only QueryableModel interface.
class NetworkOracle final : public QueryableModel {
 public:
  explicit NetworkOracle(const Network& net) : net_(&net) {}
  [[nodiscard]] Tensor query(const Tensor& inputs) const override;
  [[nodiscard]] std::size_t input_width() const override { return net_->input_width(); }
  [[nodiscard]] std::size_t output_width() const override { return net_->output_width(); }

 private:
  const Network* net_;
};

/// k probe inputs, stored as a [k x d_x] tensor.
struct QuerySet {
  Tensor queries;

  [[nodiscard]] std::size_t k() const { return queries.rows(); }
  [[nodiscard]] std::size_t dim() const { return queries.cols(); }

  /// Each coordinate ~ N(0.5, 0.1), clamped to [0,1].
  [[nodiscard]] static QuerySet gaussian(std::size_t k, std::size_t d_x, Rng& rng);
  void clamp_unit();
};

/// Two-layer scorer: w2 . ReLU(W1 f + b1) + b2, higher = more likely trojaned.
struct MetaClassifier {
  Network net;  // [Affine(c*k, H), ReLU, Affine(H, 1)]

  [[nodiscard]] static MetaClassifier initialized(std::size_t feature_width, std::size_t hidden, Rng& rng);
  /// Every parameter drawn i.i.d. N(0, scale^2).
  [[nodiscard]] static MetaClassifier standard_normal(std::size_t feature_width, std::size_t hidden, Rng& rng,
                                                      double scale = 1.0);

  [[nodiscard]] std::size_t feature_width() const { return net.input_width(); }
  [[nodiscard]] std::size_t hidden() const;

  /// 64-bit hash of all parameter bytes.
  [[nodiscard]] std::uint64_t hash() const;
};

/// Softmax outputs at each query, concatenated in query order (length c*k).
[[nodiscard]] std::vector<double> extract_features(const QueryableModel& model, const QuerySet& queries);
[[nodiscard]] std::vector<double> extract_features(const Network& model, const QuerySet& queries);

[[nodiscard]] double meta_score(const MetaClassifier& meta, std::span<const double> features);
/// Scores for every row of a [n x c*k] feature matrix.
[[nodiscard]] std::vector<double> meta_scores(const MetaClassifier& meta, const Tensor& features);

/// Differentiable feature extraction through a white-box model.
class FeaturePass {
 public:
  FeaturePass(const Network& model, const QuerySet& queries);
  [[nodiscard]] std::span<const double> features() const { return probs_.data; }
  /// Given dL/dfeatures, returns gradients w.r.t. the model's parameters (if requested) and the queries.
  [[nodiscard]] Gradients backward(std::span<const double> dfeatures, bool with_param_grads) const;

 private:
  Tape tape_;
  Tensor probs_;
};

struct MetaTrainConfig {
  std::size_t k = 10;
  std::size_t hidden = 64;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  AdamConfig adam;
  bool tune_queries = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MetaTrainResult {
  MetaClassifier meta;
  QuerySet queries;
  std::vector<double> trace;  // mean mini-batch loss per epoch
  double initial_loss = 0.0;  // full-zoo loss before the first step
  double final_loss = 0.0;    // full-zoo loss after the last step
};

/// Mean binary cross-entropy of sigmoid(META(R_i(X))) against each record's trojan label.
[[nodiscard]] double meta_loss(std::span<const ShadowRecord> zoo, const MetaClassifier& meta, const QuerySet& queries);

/// Jumbo meta-training: Adam on the BCE above. With tune_queries the query set is updated
/// jointly through every shadow model and clamped to [0,1] after each step.
[[nodiscard]] MetaTrainResult meta_train_jumbo(std::span<const ShadowRecord> zoo, const MetaTrainConfig& cfg);

/// The same loop from explicit starting points; `train_meta == false` freezes the meta-classifier.
[[nodiscard]] MetaTrainResult meta_train_from(std::span<const ShadowRecord> zoo, MetaClassifier meta,
                                              QuerySet queries, const MetaTrainConfig& cfg, bool train_meta);

enum class MetaMode { jumbo, oneclass };
[[nodiscard]] std::string_view to_string(MetaMode mode) noexcept;
[[nodiscard]] MetaMode parse_meta_mode(std::string_view s);

/// Everything needed to score an unknown model.
struct MetaState {
  MetaMode mode = MetaMode::jumbo;
  MetaClassifier meta;
  QuerySet queries;
  std::size_t classes = 0;
  std::optional<double> rho;  // one-class radius

  [[nodiscard]] std::size_t k() const { return queries.k(); }
};

/// Jumbo: META(features). One-class: rho - META(features). Higher = more likely trojaned.
/// Only forward queries of `target` are used.
[[nodiscard]] double detect(const QueryableModel& target, const MetaState& state);

/// Decision boundary of the mode's score: 0 for both (sigmoid 0.5 / score below rho).
[[nodiscard]] constexpr double detection_threshold(MetaMode) noexcept { return 0.0; }

}  // namespace trojanscan
