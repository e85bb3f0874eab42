#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "gran/error.hpp"

namespace gran {

// AUC-ROC as the Mann-Whitney statistic: P(score_pos > score_neg) plus half
// the tie probability, computed exactly via sorting and average ranks.
// Ranks are multiples of 1/2 and all intermediate sums stay well inside the
// exact integer range of a double, so the result matches the O(n^2)
// pair-counting definition bit for bit.
inline double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc_roc: scores/labels length mismatch");
  const size_t n = scores.size();
  int64_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw UsageError("auc_roc: labels must be 0 or 1");
    pos += l;
  }
  const int64_t neg = static_cast<int64_t>(n) - pos;
  if (pos == 0 || neg == 0) {
    throw UsageError("auc_roc: both classes must be present (got " + std::to_string(pos) +
                     " positives out of " + std::to_string(n) + ")");
  }

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average rank (1-based) per tie group, as an exact multiple of 0.5
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }

  const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace gran
