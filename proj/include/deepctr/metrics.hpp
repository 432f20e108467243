#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "deepctr/errors.hpp"
#include "deepctr/loss.hpp"

namespace deepctr {

struct ScoredPair {
  double score = 0.0;
  int label = 0;
};

using ScoredSet = std::vector<ScoredPair>;

// Probability that a random positive outranks a random negative, ties
// counted half. Average-rank computation, O(n log n); the O(n^2) pair
// enumeration lives in the tests as the oracle.
inline double auc(const ScoredSet& scored) {
  std::size_t positives = 0;
  for (const auto& sp : scored) positives += sp.label != 0 ? 1 : 0;
  const std::size_t negatives = scored.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw MetricError("auc undefined: need at least one positive and one negative");
  }

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scored](std::size_t a, std::size_t b) {
    return scored[a].score < scored[b].score;
  });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scored[order[j]].score == scored[order[i]].score) ++j;
    // 1-based average rank of the tie group [i, j)
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (scored[order[t]].label != 0) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Mean per-instance logloss with probability clipping.
inline double dataset_logloss(const ScoredSet& scored) {
  if (scored.empty()) throw MetricError("dataset_logloss undefined on empty set");
  double sum = 0.0;
  for (const auto& sp : scored) sum += logloss(sp.label, sp.score);
  return sum / static_cast<double>(scored.size());
}

// Speed-up of strategy A over strategy B: time of B divided by time of A.
inline double speedup_rate(double time_b, double time_a) {
  if (!(time_b > 0.0) || !(time_a > 0.0)) {
    throw ConfigError("speedup_rate requires positive times");
  }
  return time_b / time_a;
}

}  // namespace deepctr
