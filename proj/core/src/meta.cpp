#include "trojanscan/meta.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trojanscan/errors.hpp"
#include "trojanscan/loss.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {
namespace {

void check_zoo_shapes(std::span<const ShadowRecord> zoo) {
  if (zoo.empty()) throw InputError("zoo is empty");
  const auto d = zoo.front().model.input_width();
  const auto c = zoo.front().model.output_width();
  for (const auto& r : zoo) {
    if (r.model.input_width() != d || r.model.output_width() != c) {
      throw ShapeError("zoo models disagree on input/output width");
    }
  }
}

Tensor feature_matrix(std::span<const ShadowRecord> zoo, std::span<const std::size_t> idx, const QuerySet& q) {
  const std::size_t width = zoo.front().model.output_width() * q.k();
  Tensor f({idx.size(), width});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto feats = extract_features(zoo[idx[b]].model, q);
    std::copy(feats.begin(), feats.end(), f.row(b).begin());
  }
  return f;
}

}  // namespace

Tensor NetworkOracle::query(const Tensor& inputs) const { return softmax_probs(net_->forward(inputs)); }

QuerySet QuerySet::gaussian(std::size_t k, std::size_t d_x, Rng& rng) {
  if (k == 0 || d_x == 0) throw InputError("query set needs k >= 1 and d_x >= 1");
  QuerySet q{Tensor({k, d_x})};
  for (auto& v : q.queries.data) v = rng.normal(0.5, 0.1);
  q.clamp_unit();
  return q;
}

void QuerySet::clamp_unit() {
  for (auto& v : queries.data) v = std::clamp(v, 0.0, 1.0);
}

MetaClassifier MetaClassifier::initialized(std::size_t feature_width, std::size_t hidden, Rng& rng) {
  return MetaClassifier{Network::initialized(mlp_architecture(feature_width, hidden, 1), rng)};
}

MetaClassifier MetaClassifier::standard_normal(std::size_t feature_width, std::size_t hidden, Rng& rng,
                                               double scale) {
  MetaClassifier m{Network(mlp_architecture(feature_width, hidden, 1))};
  for (auto& p : m.net.params()) {
    for (auto& v : p.data) v = rng.normal(0.0, scale);
  }
  return m;
}

std::size_t MetaClassifier::hidden() const { return std::get<Affine>(net.architecture().front()).out; }

std::uint64_t MetaClassifier::hash() const {
  std::uint64_t h = 0;
  for (const auto& p : net.params()) {
    const auto bytes = std::as_bytes(std::span(p.data));
    h = derive_seed(h, "param", fnv1a64(bytes));
  }
  return h;
}

std::vector<double> extract_features(const QueryableModel& model, const QuerySet& queries) {
  if (model.input_width() != queries.dim()) {
    throw ShapeError("model input width " + std::to_string(model.input_width()) + " != query width " +
                     std::to_string(queries.dim()));
  }
  return model.query(queries.queries).data;
}

std::vector<double> extract_features(const Network& model, const QuerySet& queries) {
  return extract_features(NetworkOracle(model), queries);
}

double meta_score(const MetaClassifier& meta, std::span<const double> features) {
  if (features.size() != meta.feature_width()) {
    throw ShapeError("feature length " + std::to_string(features.size()) + " != meta input width " +
                     std::to_string(meta.feature_width()));
  }
  const Tensor f({1, features.size()}, std::vector<double>(features.begin(), features.end()));
  return meta.net.forward(f).data[0];
}

std::vector<double> meta_scores(const MetaClassifier& meta, const Tensor& features) {
  return meta.net.forward(features).data;
}

FeaturePass::FeaturePass(const Network& model, const QuerySet& queries)
    : tape_(model.forward_recorded(queries.queries)), probs_(softmax_probs(tape_.logits())) {}

Gradients FeaturePass::backward(std::span<const double> dfeatures, bool with_param_grads) const {
  if (dfeatures.size() != probs_.size()) throw ShapeError("feature gradient length mismatch");
  const Tensor dprobs(probs_.shape, std::vector<double>(dfeatures.begin(), dfeatures.end()));
  return tape_.backward(softmax_backward(probs_, dprobs), with_param_grads);
}

void MetaTrainConfig::validate() const {
  if (k == 0) throw InputError("k must be at least 1");
  if (hidden == 0) throw InputError("meta hidden width must be positive");
  if (batch_size == 0) throw InputError("meta batch size must be positive");
  adam.validate();
}

double meta_loss(std::span<const ShadowRecord> zoo, const MetaClassifier& meta, const QuerySet& queries) {
  check_zoo_shapes(zoo);
  std::vector<std::size_t> idx(zoo.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto scores = meta_scores(meta, feature_matrix(zoo, idx, queries));
  std::vector<int> labels;
  for (const auto& r : zoo) labels.push_back(r.trojaned ? 1 : 0);
  return binary_cross_entropy_with_logits(scores, labels).value;
}

MetaTrainResult meta_train_jumbo(std::span<const ShadowRecord> zoo, const MetaTrainConfig& cfg) {
  cfg.validate();
  check_zoo_shapes(zoo);
  const std::size_t d = zoo.front().model.input_width();
  const std::size_t c = zoo.front().model.output_width();
  Rng meta_rng = Rng::stream(cfg.seed, "meta-init");
  Rng query_rng = Rng::stream(cfg.seed, "queries");
  auto meta = MetaClassifier::initialized(c * cfg.k, cfg.hidden, meta_rng);
  auto queries = QuerySet::gaussian(cfg.k, d, query_rng);
  return meta_train_from(zoo, std::move(meta), std::move(queries), cfg, true);
}

MetaTrainResult meta_train_from(std::span<const ShadowRecord> zoo, MetaClassifier meta, QuerySet queries,
                                const MetaTrainConfig& cfg, bool train_meta) {
  cfg.validate();
  check_zoo_shapes(zoo);
  const std::size_t c = zoo.front().model.output_width();
  if (queries.dim() != zoo.front().model.input_width()) throw ShapeError("query width != model input width");
  if (meta.feature_width() != c * queries.k()) throw ShapeError("meta input width != c*k");
  const bool any_pos = std::any_of(zoo.begin(), zoo.end(), [](const auto& r) { return r.trojaned; });
  const bool any_neg = std::any_of(zoo.begin(), zoo.end(), [](const auto& r) { return !r.trojaned; });
  if (!any_pos || !any_neg) throw InputError("meta-training needs both benign and trojaned models");

  const bool tune = cfg.tune_queries;
  MetaTrainResult result;
  result.meta = std::move(meta);
  result.queries = std::move(queries);
  MetaClassifier& m = result.meta;
  QuerySet& q = result.queries;
  result.initial_loss = meta_loss(zoo, m, q);

  std::vector<std::size_t> order(zoo.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fixed queries: features never change, compute them once.
  const Tensor fixed_features = tune ? Tensor() : feature_matrix(zoo, order, q);
  const std::size_t width = m.feature_width();

  std::vector<Tensor*> params;
  if (train_meta) {
    for (auto& p : m.net.params()) params.push_back(&p);
  }
  if (tune) params.push_back(&q.queries);
  AdamState adam;
  Rng shuffle_rng = Rng::stream(cfg.seed, "meta-shuffle");

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bs = std::min(cfg.batch_size, order.size() - start);
      Tensor features({bs, width});
      std::vector<int> labels(bs);
      std::vector<FeaturePass> passes;
      if (tune) passes.reserve(bs);
      for (std::size_t b = 0; b < bs; ++b) {
        const std::size_t i = order[start + b];
        labels[b] = zoo[i].trojaned ? 1 : 0;
        if (tune) {
          passes.emplace_back(zoo[i].model, q);
          const auto f = passes.back().features();
          std::copy(f.begin(), f.end(), features.row(b).begin());
        } else {
          const auto f = fixed_features.row(i);
          std::copy(f.begin(), f.end(), features.row(b).begin());
        }
      }

      const Tape meta_tape = m.net.forward_recorded(features);
      const auto loss = binary_cross_entropy_with_logits(meta_tape.logits().data, labels);
      if (!std::isfinite(loss.value)) throw DivergenceError("non-finite meta-training loss");
      const Tensor dscores({bs, 1}, loss.grad.data);
      const auto meta_grads = meta_tape.backward(dscores, train_meta);
      if (train_meta) {
        m.net.zero_grad();
        m.net.accumulate_grad(meta_grads);
      }
      if (tune) {
        q.queries.zero_grad();
        auto& qg = *q.queries.grad;
        for (std::size_t b = 0; b < bs; ++b) {
          const auto g = passes[b].backward(meta_grads.input.row(b), false);
          for (std::size_t j = 0; j < qg.size(); ++j) qg[j] += g.input.data[j];
        }
      }
      adam_step(std::span<Tensor* const>(params), adam, cfg.adam);
      if (tune) q.clamp_unit();
      epoch_sum += loss.value;
      ++batches;
    }
    result.trace.push_back(epoch_sum / static_cast<double>(batches));
  }
  for (auto& p : m.net.params()) p.grad.reset();
  q.queries.grad.reset();
  result.final_loss = meta_loss(zoo, m, q);
  return result;
}

std::string_view to_string(MetaMode mode) noexcept { return mode == MetaMode::oneclass ? "oneclass" : "jumbo"; }

MetaMode parse_meta_mode(std::string_view s) {
  if (s == "jumbo") return MetaMode::jumbo;
  if (s == "oneclass") return MetaMode::oneclass;
  throw InputError("unknown meta mode '" + std::string(s) + "'");
}

double detect(const QueryableModel& target, const MetaState& state) {
  if (target.output_width() != state.classes) throw ShapeError("target class count does not match meta state");
  const auto features = extract_features(target, state.queries);
  const double s = meta_score(state.meta, features);
  if (state.mode == MetaMode::oneclass) {
    if (!state.rho) throw StateError("one-class state has no radius");
    return *state.rho - s;
  }
  return s;
}

}  // namespace trojanscan
