#pragma once

#include <span>
#include <vector>

#include "trojanscan/meta.hpp"

namespace trojanscan {

struct OneClassState {
  MetaClassifier meta;
  double rho = 0.0;
  double nu = 0.1;
};

struct OneClassConfig {
  MetaTrainConfig meta;  // k, hidden, epochs, batch, adam, tune_queries, seed
  double nu = 0.1;

  void validate() const;
};

struct OneClassResult {
  OneClassState state;
  QuerySet queries;
  std::vector<double> trace;  // objective on the full zoo after each epoch
  double initial_objective = 0.0;
};

/// Lower empirical nu-quantile: the ceil(nu*m)-th smallest score.
[[nodiscard]] double nu_quantile(std::span<const double> scores, double nu);

/// 0.5 * sum of squared parameter entries + (1/nu) * mean(ReLU(rho - s_i)) - rho.
[[nodiscard]] double oneclass_objective(const MetaClassifier& meta, double rho, double nu,
                                        std::span<const double> scores);

/// Alternates Adam steps on (meta, queries) with rho fixed, and an analytic rho update
/// (nu-quantile of the current scores) once per epoch. Benign models end up scoring >= rho.
[[nodiscard]] OneClassResult meta_train_oneclass(std::span<const ShadowRecord> benign_zoo, const OneClassConfig& cfg);

[[nodiscard]] MetaState to_meta_state(const OneClassResult& r, std::size_t classes);

}  // namespace trojanscan
