#include "deepctr/metrics.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "deepctr/rng.hpp"

namespace dc = deepctr;

namespace {

// O(n^2) oracle: concordant pairs count 1, ties 0.5.
double auc_pair_count(const dc::ScoredSet& scored) {
  double concordant = 0.0;
  std::size_t pairs = 0;
  for (const auto& pos : scored) {
    if (pos.label == 0) continue;
    for (const auto& neg : scored) {
      if (neg.label != 0) continue;
      ++pairs;
      if (pos.score > neg.score) {
        concordant += 1.0;
      } else if (pos.score == neg.score) {
        concordant += 0.5;
      }
    }
  }
  return concordant / static_cast<double>(pairs);
}

dc::ScoredSet scored_of(std::initializer_list<std::pair<double, int>> pairs) {
  dc::ScoredSet s;
  for (const auto& [score, label] : pairs) s.push_back({score, label});
  return s;
}

}  // namespace

TEST(Auc, PerfectSeparation) {
  EXPECT_DOUBLE_EQ(dc::auc(scored_of({{0.9, 1}, {0.1, 0}})), 1.0);
}

TEST(Auc, AllTiedScoresGiveHalf) {
  EXPECT_DOUBLE_EQ(dc::auc(scored_of({{0.4, 1}, {0.4, 0}, {0.4, 1}, {0.4, 0}})), 0.5);
}

TEST(Auc, ThreeOfFourPairsConcordant) {
  // pos {0.8, 0.3}, neg {0.5, 0.2}
  EXPECT_DOUBLE_EQ(dc::auc(scored_of({{0.8, 1}, {0.3, 1}, {0.5, 0}, {0.2, 0}})), 0.75);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(dc::auc(scored_of({{0.5, 1}, {0.6, 1}})), dc::MetricError);
  EXPECT_THROW(dc::auc(scored_of({{0.5, 0}})), dc::MetricError);
}

// Sort-based AUC vs pair enumeration on 500 random sets with ties.
TEST(Auc, MatchesPairCountOracle) {
  dc::Rng rng(2718);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(199);
    dc::ScoredSet scored;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse score grid so ties actually happen
      const double score = static_cast<double>(rng.uniform_int(20)) / 19.0;
      const int label = rng.bernoulli(0.4) ? 1 : 0;
      has_pos |= label == 1;
      has_neg |= label == 0;
      scored.push_back({score, label});
    }
    if (!has_pos) scored.push_back({0.5, 1});
    if (!has_neg) scored.push_back({0.5, 0});
    const double fast = dc::auc(scored);
    const double slow = auc_pair_count(scored);
    ASSERT_LT(std::abs(fast - slow), 1e-12) << "trial " << trial;
  }
}

TEST(Auc, InvariantUnderStrictlyIncreasingTransform) {
  dc::Rng rng(314);
  dc::ScoredSet scored;
  for (int i = 0; i < 200; ++i) {
    scored.push_back({rng.uniform(), rng.bernoulli(0.5) ? 1 : 0});
  }
  scored.push_back({0.5, 1});
  scored.push_back({0.5, 0});
  dc::ScoredSet squared = scored;
  for (auto& sp : squared) sp.score = sp.score * sp.score;  // increasing on [0,1]
  EXPECT_DOUBLE_EQ(dc::auc(scored), dc::auc(squared));
}

TEST(DatasetLogloss, ClosedForms) {
  EXPECT_NEAR(dc::dataset_logloss(scored_of({{0.5, 1}, {0.5, 0}, {0.5, 1}})),
              std::log(2.0), 1e-12);
  EXPECT_NEAR(dc::dataset_logloss(scored_of({{1.0, 1}, {0.0, 0}})), 0.0, 1e-11);
  EXPECT_NEAR(dc::dataset_logloss(scored_of({{0.8, 1}, {0.8, 0}})),
              (-std::log(0.8) - std::log(0.2)) / 2.0, 1e-12);
}

TEST(DatasetLogloss, MovingTowardLabelDecreasesLoss) {
  dc::ScoredSet base = scored_of({{0.6, 1}, {0.3, 0}, {0.7, 1}});
  const double before = dc::dataset_logloss(base);
  base[0].score = 0.7;
  EXPECT_LT(dc::dataset_logloss(base), before);
}

TEST(DatasetLogloss, EmptySetIsAnError) {
  EXPECT_THROW(dc::dataset_logloss({}), dc::MetricError);
}

TEST(SpeedupRate, RatioOfTimes) {
  EXPECT_DOUBLE_EQ(dc::speedup_rate(10.0, 5.0), 2.0);
  EXPECT_DOUBLE_EQ(dc::speedup_rate(3.5, 3.5), 1.0);
  EXPECT_DOUBLE_EQ(dc::speedup_rate(13.12, 1.0), 13.12);
}

TEST(SpeedupRate, RejectsNonPositiveTimes) {
  EXPECT_THROW(dc::speedup_rate(0.0, 1.0), dc::ConfigError);
  EXPECT_THROW(dc::speedup_rate(1.0, -2.0), dc::ConfigError);
}
