#include "trojanscan/auc.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "trojanscan/errors.hpp"

namespace trojanscan {

double compute_auc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) throw InputError("AUC needs non-empty positive and negative scores");
  const std::size_t np = scores_pos.size();
  const std::size_t nn = scores_neg.size();

  std::vector<std::pair<double, bool>> all;
  all.reserve(np + nn);
  for (double s : scores_pos) all.emplace_back(s, true);
  for (double s : scores_neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Twice the positive rank sum keeps every quantity an exact integer.
  long double twice_rank_sum = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < all.size() && all[j].first == all[i].first) {
      pos_in_group += all[j].second ? 1 : 0;
      ++j;
    }
    // ranks i+1 .. j share the average (i+1+j)/2
    twice_rank_sum += static_cast<long double>(pos_in_group) * static_cast<long double>(i + 1 + j);
    i = j;
  }
  const long double twice_u = twice_rank_sum - static_cast<long double>(np) * static_cast<long double>(np + 1);
  const double u = static_cast<double>(twice_u) / 2.0;
  return u / (static_cast<double>(np) * static_cast<double>(nn));
}

DetectionReport DetectionReport::from_rows(std::vector<DetectionRow> rows, double threshold) {
  DetectionReport r;
  r.threshold = threshold;
  for (const auto& row : rows) (row.label != 0 ? r.scores_trojan : r.scores_benign).push_back(row.score);
  r.rows = std::move(rows);
  if (!r.scores_benign.empty() && !r.scores_trojan.empty()) r.auc = compute_auc(r.scores_trojan, r.scores_benign);
  return r;
}

}  // namespace trojanscan
