#pragma once

#include <span>
#include <string>
#include <vector>

namespace trojanscan {

/// Mann-Whitney AUC: probability that a random positive outscores a random negative,
/// with ties counted as one half. Computed from average ranks in O((n+m) log(n+m)).
[[nodiscard]] double compute_auc(std::span<const double> scores_pos, std::span<const double> scores_neg);

struct DetectionRow {
  std::string model;
  int label = 0;  // 1 = trojaned
  double score = 0.0;
};

struct DetectionReport {
  std::vector<double> scores_benign;
  std::vector<double> scores_trojan;
  double auc = 0.5;
  double threshold = 0.0;  // score > threshold flags a model as trojaned
  std::vector<DetectionRow> rows;

  [[nodiscard]] static DetectionReport from_rows(std::vector<DetectionRow> rows, double threshold);
};

}  // namespace trojanscan
