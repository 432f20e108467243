#include "deepctr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "deepctr/metrics.hpp"
#include "deepctr/trainer.hpp"
#include "test_support.hpp"

namespace dc = deepctr;

namespace {

// Direct average of 1 - q/L over every cross-group user pair.
double personalization_brute(const std::vector<dc::RecommendationList>& lists,
                             const dc::UserGroupSet& groups, std::size_t L) {
  std::vector<std::set<std::uint32_t>> tops(lists.size());
  for (std::size_t u = 0; u < lists.size(); ++u) {
    tops[u] = std::set<std::uint32_t>(lists[u].ranked_apps.begin(),
                                      lists[u].ranked_apps.begin() + L);
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < lists.size(); ++a) {
    for (std::size_t b = 0; b < lists.size(); ++b) {
      if (groups.users[a].type >= groups.users[b].type) continue;
      std::size_t q = 0;
      for (std::uint32_t app : tops[a]) q += tops[b].count(app);
      sum += 1.0 - static_cast<double>(q) / static_cast<double>(L);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

dc::RecommendationList list_of(std::uint32_t user, std::vector<std::uint32_t> apps) {
  dc::RecommendationList list;
  list.user_id = user;
  list.ranked_apps = std::move(apps);
  list.downloads.assign(list.ranked_apps.size(), 1.0);
  return list;
}

dc::UserGroupSet flat_groups(std::uint32_t t, std::uint32_t n) {
  dc::UserGroupSet set;
  set.types = t;
  set.per_type = n;
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      dc::User u;
      u.id = i * n + j;
      u.type = i;
      set.users.push_back(u);
    }
  }
  return set;
}

}  // namespace

TEST(GenerateSynthetic, NoSignalMeansBalancedLabelsAndChanceAuc) {
  dc::SyntheticSpec spec;
  spec.fields = 4;
  spec.cardinality = 5;
  spec.n_train = 0;
  spec.n_test = 100000;
  spec.linear_scale = 0.0;
  spec.noise_scale = 0.0;
  spec.seed = 9;
  const auto data = dc::generate_synthetic(spec);
  double mean_label = 0.0;
  for (const auto& inst : data.test) mean_label += inst.label;
  mean_label /= static_cast<double>(data.test.size());
  EXPECT_NEAR(mean_label, 0.5, 0.01);

  // all true logits are zero: every score ties, AUC is exactly 1/2
  dc::ScoredSet scored;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    scored.push_back({data.true_logits_test[i], data.test[i].label});
  }
  EXPECT_DOUBLE_EQ(dc::auc(scored), 0.5);
}

TEST(GenerateSynthetic, TrueLogitsScoreAboveChanceWithPlantedSignal) {
  dc::SyntheticSpec spec;
  spec.fields = 5;
  spec.cardinality = 8;
  spec.n_train = 0;
  spec.n_test = 20000;
  spec.linear_scale = 0.5;
  spec.pairs = {{0, 1, 1.5}};
  spec.triples = {{2, 3, 4, 1.5}};
  spec.seed = 10;
  const auto data = dc::generate_synthetic(spec);
  dc::ScoredSet scored;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    scored.push_back({data.true_logits_test[i], data.test[i].label});
  }
  EXPECT_GT(dc::auc(scored), 0.65);
}

TEST(GenerateSynthetic, SameSeedReproducesTheDraw) {
  dc::SyntheticSpec spec;
  spec.fields = 3;
  spec.cardinality = 4;
  spec.n_train = 50;
  spec.n_test = 20;
  spec.pairs = {{0, 1, 1.0}};
  spec.seed = 77;
  const auto a = dc::generate_synthetic(spec);
  const auto b = dc::generate_synthetic(spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.true_logits_test, b.true_logits_test);
}

// A trained FM should pick up the planted pair: the learned latent inner
// product for the strongest interaction cell matches the planted sign.
TEST(GenerateSynthetic, FmRecoversPlantedPairSign) {
  dc::SyntheticSpec spec;
  spec.fields = 2;
  spec.cardinality = 4;
  spec.n_train = 4000;
  spec.n_test = 0;
  spec.linear_scale = 0.0;
  spec.pairs = {{0, 1, 2.0}};
  spec.seed = 13;
  const auto data = dc::generate_synthetic(spec);

  dc::ModelSpec mspec;
  mspec.kind = dc::ModelKind::kFm;
  mspec.k = 4;
  dc::Model model(mspec, data.schema.total_features(), spec.fields, 15);
  dc::TrainConfig cfg;
  cfg.bs = 64;
  cfg.lr = 0.03;
  cfg.seed = 17;
  dc::Optimizer opt = dc::make_optimizer(cfg, mspec);
  for (int epoch = 0; epoch < 15; ++epoch) {
    dc::train_epoch(model, opt, data.train, cfg, epoch);
  }

  // strongest cell of the rank-1 planted matrix
  double best = 0.0;
  std::uint32_t best_a = 0, best_b = 0;
  for (std::uint32_t a = 0; a < spec.cardinality; ++a) {
    for (std::uint32_t b = 0; b < spec.cardinality; ++b) {
      const double cell = data.truth.pair_f[0][0][a] * data.truth.pair_f[0][1][b];
      if (std::abs(cell) > std::abs(best)) {
        best = cell;
        best_a = a;
        best_b = b;
      }
    }
  }
  const auto gid_a =
      data.schema.global_id(0, data.schema.field(0).vocab.at(dc::synthetic_token(best_a)));
  const auto gid_b =
      data.schema.global_id(1, data.schema.field(1).vocab.at(dc::synthetic_token(best_b)));
  const double learned = dc::dot(model.params().V.row(gid_a), model.params().V.row(gid_b));
  EXPECT_GT(learned * best, 0.0) << "learned " << learned << " planted " << best;
}

TEST(Catalog, JsonRoundTrip) {
  const auto cat = dc::generate_catalog(20, 4, 1000.0, 3);
  const auto restored = dc::AppCatalog::from_json(cat.to_json());
  ASSERT_EQ(restored.apps.size(), cat.apps.size());
  for (std::size_t i = 0; i < cat.apps.size(); ++i) {
    EXPECT_EQ(restored.apps[i].id, cat.apps[i].id);
    EXPECT_EQ(restored.apps[i].type, cat.apps[i].type);
    EXPECT_DOUBLE_EQ(restored.apps[i].downloads, cat.apps[i].downloads);
  }
}

TEST(GenerateUsers, SixTypesHundredEachGivesSixHundredUsers) {
  const auto catalog = dc::generate_catalog(120, 6, 1000.0, 5);
  const auto users = dc::generate_users(6, 100, catalog, 5, 21);
  EXPECT_EQ(users.users.size(), 600u);
  for (const auto& user : users.users) {
    ASSERT_EQ(user.history.size(), 5u);
    std::set<std::uint32_t> distinct(user.history.begin(), user.history.end());
    EXPECT_EQ(distinct.size(), 5u);  // sampled without replacement
    for (std::uint32_t app : user.history) {
      EXPECT_EQ(catalog.apps[app].type, user.type);
    }
  }
}

TEST(GenerateUsers, SameSeedSameHistories) {
  const auto catalog = dc::generate_catalog(60, 3, 1000.0, 5);
  const auto a = dc::generate_users(3, 10, catalog, 4, 33);
  const auto b = dc::generate_users(3, 10, catalog, 4, 33);
  for (std::size_t u = 0; u < a.users.size(); ++u) {
    EXPECT_EQ(a.users[u].history, b.users[u].history);
  }
}

TEST(GenerateUsers, EmptyHistoryIsValidColdStart) {
  const auto catalog = dc::generate_catalog(12, 3, 1000.0, 5);
  const auto users = dc::generate_users(3, 2, catalog, 0, 1);
  for (const auto& user : users.users) EXPECT_TRUE(user.history.empty());
}

TEST(GenerateUsers, PoolSmallerThanHistoryIsAnError) {
  const auto catalog = dc::generate_catalog(12, 3, 1000.0, 5);  // 4 apps per type
  EXPECT_THROW(dc::generate_users(3, 2, catalog, 5, 1), dc::ConfigError);
}

TEST(Recommend, ConstantModelGivesIdenticalListsInIdOrder) {
  const auto catalog = dc::generate_catalog(10, 2, 1000.0, 7);
  const auto users = dc::generate_users(2, 3, catalog, 2, 9);
  dc::RecEncoding enc{2, 10, 2};
  dc::ModelSpec spec;
  spec.kind = dc::ModelKind::kLr;
  dc::Model model(spec, enc.feature_count(), enc.field_count(), 1);  // all-zero weights
  const auto lists = dc::recommend(model, users, catalog, enc);
  ASSERT_EQ(lists.size(), 6u);
  std::vector<std::uint32_t> id_order(10);
  std::iota(id_order.begin(), id_order.end(), 0);
  for (const auto& list : lists) EXPECT_EQ(list.ranked_apps, id_order);
}

TEST(Recommend, SortsByScoreDescending) {
  const dc::AppCatalog catalog{
      {{0, 0, 10.0}, {1, 0, 20.0}, {2, 1, 30.0}}, 2};
  dc::UserGroupSet users = flat_groups(2, 1);
  dc::RecEncoding enc{0, 3, 2};
  dc::ModelSpec spec;
  spec.kind = dc::ModelKind::kLr;
  dc::Model model(spec, enc.feature_count(), enc.field_count(), 1);
  // scores per app via the candidate-app field: 0.2, 0.9, 0.5
  model.params().w[0] = 0.2;
  model.params().w[1] = 0.9;
  model.params().w[2] = 0.5;
  const auto lists = dc::recommend(model, users, catalog, enc);
  EXPECT_EQ(lists[0].ranked_apps, (std::vector<std::uint32_t>{1, 2, 0}));
  EXPECT_EQ(lists[0].downloads, (std::vector<double>{20.0, 30.0, 10.0}));
}

TEST(Personalization, IdenticalListsGiveExactZero) {
  const auto groups = flat_groups(3, 2);
  std::vector<dc::RecommendationList> lists;
  for (std::uint32_t u = 0; u < 6; ++u) lists.push_back(list_of(u, {0, 1, 2, 3, 4}));
  EXPECT_EQ(dc::personalization_at(lists, groups, 5), 0.0);
}

TEST(Personalization, DisjointListsGiveExactOne) {
  const auto groups = flat_groups(3, 2);
  std::vector<dc::RecommendationList> lists;
  for (std::uint32_t u = 0; u < 6; ++u) {
    lists.push_back(list_of(u, {u * 5, u * 5 + 1, u * 5 + 2, u * 5 + 3, u * 5 + 4}));
  }
  EXPECT_EQ(dc::personalization_at(lists, groups, 5), 1.0);
}

TEST(Personalization, SharedTwoOfFiveGivesPointSix) {
  // cross-group pairs share exactly items {0,1}; within-group pairs are free
  const auto groups = flat_groups(3, 2);
  std::vector<dc::RecommendationList> lists;
  for (std::uint32_t u = 0; u < 6; ++u) {
    const std::uint32_t base = 10 + u * 10;
    lists.push_back(list_of(u, {0, 1, base, base + 1, base + 2}));
  }
  EXPECT_NEAR(dc::personalization_at(lists, groups, 5), 0.6, 1e-12);
}

TEST(Personalization, ChainEqualsBruteForceAverage) {
  dc::Rng rng(55);
  const auto groups = flat_groups(3, 10);
  std::vector<dc::RecommendationList> lists;
  for (std::uint32_t u = 0; u < 30; ++u) {
    std::vector<std::uint32_t> apps(20);
    std::iota(apps.begin(), apps.end(), 0);
    rng.shuffle(apps.begin(), apps.end());
    lists.push_back(list_of(u, apps));
  }
  for (std::size_t L : {1u, 3u, 5u}) {
    EXPECT_NEAR(dc::personalization_at(lists, groups, L),
                personalization_brute(lists, groups, L), 1e-12);
  }
}

TEST(Personalization, ListShorterThanLIsAnError) {
  const auto groups = flat_groups(2, 1);
  std::vector<dc::RecommendationList> lists{list_of(0, {1, 2}), list_of(1, {3, 4})};
  EXPECT_THROW(dc::personalization_at(lists, groups, 5), dc::ConfigError);
}

TEST(Coverage, FrozenExamples) {
  // all users share one top-2 set, 10 candidates -> 0.2
  std::vector<dc::RecommendationList> shared;
  for (std::uint32_t u = 0; u < 4; ++u) shared.push_back(list_of(u, {3, 7, 0, 1}));
  EXPECT_DOUBLE_EQ(dc::coverage_at(shared, 10, 2), 0.2);

  // union {a,b,c} over 4 users at L=2 -> 0.3
  std::vector<dc::RecommendationList> three{
      list_of(0, {1, 2, 9}), list_of(1, {2, 1, 9}), list_of(2, {1, 3, 9}),
      list_of(3, {3, 2, 9})};
  EXPECT_DOUBLE_EQ(dc::coverage_at(three, 10, 2), 0.3);

  // every candidate somewhere in a top-2 -> 1.0
  std::vector<dc::RecommendationList> full{list_of(0, {0, 1}), list_of(1, {2, 3})};
  EXPECT_DOUBLE_EQ(dc::coverage_at(full, 4, 2), 1.0);
}

TEST(Coverage, MonotoneNondecreasingInL) {
  dc::Rng rng(66);
  std::vector<dc::RecommendationList> lists;
  for (std::uint32_t u = 0; u < 8; ++u) {
    std::vector<std::uint32_t> apps(15);
    std::iota(apps.begin(), apps.end(), 0);
    rng.shuffle(apps.begin(), apps.end());
    lists.push_back(list_of(u, apps));
  }
  double prev = 0.0;
  for (std::size_t L = 1; L <= 15; ++L) {
    const double c = dc::coverage_at(lists, 15, L);
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(Popularity, FrozenExamples) {
  auto one = list_of(0, {4, 9});
  one.downloads = {100.0, 50.0};
  EXPECT_DOUBLE_EQ(dc::popularity_at({one}, 2, 100.0).mean, 0.75);

  auto maxed = list_of(0, {1, 2});
  maxed.downloads = {200.0, 200.0};
  EXPECT_DOUBLE_EQ(dc::popularity_at({maxed}, 2, 200.0).mean, 1.0);

  auto zero = list_of(0, {1, 2});
  zero.downloads = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(dc::popularity_at({zero}, 2, 50.0).mean, 0.0);
}

TEST(Popularity, MeanBoundedAndVarianceAcrossLists) {
  auto a = list_of(0, {0, 1});
  a.downloads = {100.0, 100.0};  // per-list mean 1.0
  auto b = list_of(1, {2, 3});
  b.downloads = {0.0, 0.0};  // per-list mean 0.0
  const auto res = dc::popularity_at({a, b}, 2, 100.0);
  EXPECT_DOUBLE_EQ(res.mean, 0.5);
  EXPECT_DOUBLE_EQ(res.variance, 0.25);
}

TEST(TrafficRatios, ClosedForms) {
  EXPECT_DOUBLE_EQ(dc::ctr_ratio(25.0, 100.0), 0.25);
  EXPECT_DOUBLE_EQ(dc::cvr_ratio(30.0, 60.0), 0.5);
  EXPECT_THROW(dc::ctr_ratio(1.0, 0.0), dc::ConfigError);
  EXPECT_THROW(dc::cvr_ratio(1.0, 0.0), dc::ConfigError);
}

TEST(AbReport, IdenticalListsGiveZeroDeltas) {
  const auto groups = flat_groups(3, 2);
  std::vector<dc::RecommendationList> lists;
  dc::Rng rng(77);
  for (std::uint32_t u = 0; u < 6; ++u) {
    std::vector<std::uint32_t> apps(25);
    std::iota(apps.begin(), apps.end(), 0);
    rng.shuffle(apps.begin(), apps.end());
    auto list = list_of(u, apps);
    for (std::size_t r = 0; r < list.downloads.size(); ++r) {
      list.downloads[r] = static_cast<double>(rng.uniform_int(100));
    }
    lists.push_back(std::move(list));
  }
  const auto report = dc::ab_report(lists, lists, groups, 25, 100.0, {5, 10, 20});
  ASSERT_EQ(report.rows.size(), 3u);
  for (const auto& row : report.rows) {
    EXPECT_DOUBLE_EQ(row.personalization_a, row.personalization_b);
    EXPECT_DOUBLE_EQ(row.coverage_a, row.coverage_b);
    EXPECT_DOUBLE_EQ(row.popularity_a.mean, row.popularity_b.mean);
  }
}

TEST(AbReport, PermutedListsAreMorePersonalizedThanConstant) {
  const auto groups = flat_groups(3, 4);
  std::vector<dc::RecommendationList> constant, permuted;
  dc::Rng rng(88);
  std::vector<std::uint32_t> base(30);
  std::iota(base.begin(), base.end(), 0);
  for (std::uint32_t u = 0; u < 12; ++u) {
    constant.push_back(list_of(u, base));
    auto apps = base;
    rng.shuffle(apps.begin(), apps.end());
    permuted.push_back(list_of(u, apps));
  }
  const auto report = dc::ab_report(constant, permuted, groups, 30, 10.0, {5, 10, 20});
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.personalization_a, 0.0);
    EXPECT_GT(row.personalization_b, row.personalization_a);
  }
}

TEST(AbReport, MismatchedUserSetsAreAnError) {
  const auto groups = flat_groups(2, 1);
  std::vector<dc::RecommendationList> a{list_of(0, {0}), list_of(1, {1})};
  std::vector<dc::RecommendationList> b{list_of(0, {0}), list_of(2, {1})};
  EXPECT_THROW(dc::ab_report(a, b, groups, 5, 1.0, {1}), dc::ConfigError);
}

TEST(ClickLog, GeneratesLabeledImpressions) {
  const auto catalog = dc::generate_catalog(30, 3, 1000.0, 5);
  const auto users = dc::generate_users(3, 4, catalog, 3, 7);
  const dc::RecEncoding enc{3, 30, 3};
  dc::ClickModel click;
  const auto log = dc::generate_click_log(users, catalog, enc, click, 20, 11);
  EXPECT_EQ(log.size(), 12u * 20u);
  std::size_t clicks = 0;
  for (const auto& inst : log) {
    ASSERT_EQ(inst.ids.size(), enc.field_count());
    clicks += inst.label;
  }
  EXPECT_GT(clicks, 0u);
  EXPECT_LT(clicks, log.size());
}
