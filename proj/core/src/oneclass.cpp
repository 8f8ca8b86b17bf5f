#include "trojanscan/oneclass.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trojanscan/errors.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {
namespace {

std::vector<double> zoo_scores(std::span<const ShadowRecord> zoo, const MetaClassifier& meta, const QuerySet& q) {
  std::vector<double> out;
  out.reserve(zoo.size());
  for (const auto& r : zoo) out.push_back(meta_score(meta, extract_features(r.model, q)));
  return out;
}

}  // namespace

void OneClassConfig::validate() const {
  meta.validate();
  if (!(nu > 0.0 && nu < 1.0)) throw InputError("nu must lie in (0, 1)");
}

double nu_quantile(std::span<const double> scores, double nu) {
  if (scores.empty()) throw InputError("quantile of no scores");
  if (!(nu > 0.0 && nu < 1.0)) throw InputError("nu must lie in (0, 1)");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(nu * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

double oneclass_objective(const MetaClassifier& meta, double rho, double nu, std::span<const double> scores) {
  double l2 = 0.0;
  for (const auto& p : meta.net.params()) {
    for (double v : p.data) l2 += v * v;
  }
  double hinge = 0.0;
  for (double s : scores) hinge += std::max(0.0, rho - s);
  return 0.5 * l2 + hinge / (nu * static_cast<double>(scores.size())) - rho;
}

OneClassResult meta_train_oneclass(std::span<const ShadowRecord> benign_zoo, const OneClassConfig& cfg) {
  cfg.validate();
  if (benign_zoo.empty()) throw InputError("one-class training needs at least one benign model");
  const std::size_t d = benign_zoo.front().model.input_width();
  const std::size_t c = benign_zoo.front().model.output_width();
  const auto& mc = cfg.meta;

  Rng meta_rng = Rng::stream(mc.seed, "meta-init");
  Rng query_rng = Rng::stream(mc.seed, "queries");
  Rng shuffle_rng = Rng::stream(mc.seed, "meta-shuffle");

  OneClassResult result{{MetaClassifier::initialized(c * mc.k, mc.hidden, meta_rng), 0.0, cfg.nu},
                        QuerySet::gaussian(mc.k, d, query_rng), {}, 0.0};
  MetaClassifier& meta = result.state.meta;
  QuerySet& q = result.queries;
  double& rho = result.state.rho;

  auto scores = zoo_scores(benign_zoo, meta, q);
  rho = nu_quantile(scores, cfg.nu);
  result.initial_objective = oneclass_objective(meta, rho, cfg.nu, scores);

  std::vector<Tensor*> params;
  for (auto& p : meta.net.params()) params.push_back(&p);
  if (mc.tune_queries) params.push_back(&q.queries);
  AdamState adam;

  std::vector<std::size_t> order(benign_zoo.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t width = meta.feature_width();

  for (std::size_t epoch = 0; epoch < mc.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += mc.batch_size) {
      const std::size_t bs = std::min(mc.batch_size, order.size() - start);
      Tensor features({bs, width});
      std::vector<FeaturePass> passes;
      passes.reserve(bs);
      for (std::size_t b = 0; b < bs; ++b) {
        passes.emplace_back(benign_zoo[order[start + b]].model, q);
        const auto f = passes.back().features();
        std::copy(f.begin(), f.end(), features.row(b).begin());
      }
      const Tape tape = meta.net.forward_recorded(features);
      const auto& s = tape.logits().data;

      Tensor dscores({bs, 1});
      const double coef = 1.0 / (cfg.nu * static_cast<double>(bs));
      for (std::size_t b = 0; b < bs; ++b) dscores.data[b] = rho > s[b] ? -coef : 0.0;
      const auto grads = tape.backward(dscores, true);

      meta.net.zero_grad();
      meta.net.accumulate_grad(grads);
      for (auto& p : meta.net.params()) {
        for (std::size_t j = 0; j < p.size(); ++j) (*p.grad)[j] += p.data[j];
      }
      if (mc.tune_queries) {
        q.queries.zero_grad();
        auto& qg = *q.queries.grad;
        for (std::size_t b = 0; b < bs; ++b) {
          const auto g = passes[b].backward(grads.input.row(b), false);
          for (std::size_t j = 0; j < qg.size(); ++j) qg[j] += g.input.data[j];
        }
      }
      adam_step(std::span<Tensor* const>(params), adam, mc.adam);
      if (mc.tune_queries) q.clamp_unit();
    }
    scores = zoo_scores(benign_zoo, meta, q);
    rho = nu_quantile(scores, cfg.nu);
    const double obj = oneclass_objective(meta, rho, cfg.nu, scores);
    if (!std::isfinite(obj)) throw DivergenceError("non-finite one-class objective");
    result.trace.push_back(obj);
  }
  for (auto& p : meta.net.params()) p.grad.reset();
  q.queries.grad.reset();
  return result;
}

MetaState to_meta_state(const OneClassResult& r, std::size_t classes) {
  return MetaState{MetaMode::oneclass, r.state.meta, r.queries, classes, r.state.rho};
}

}  // namespace trojanscan
