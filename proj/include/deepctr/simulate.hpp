#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepctr/errors.hpp"
#include "deepctr/metrics.hpp"
#include "deepctr/model.hpp"
#include "deepctr/rng.hpp"
#include "deepctr/schema.hpp"

namespace deepctr {

// --- synthetic CTR data with planted interactions ---------------------------

struct PlantedPair {
  std::size_t field_a = 0;
  std::size_t field_b = 1;
  double scale = 1.0;
};

struct PlantedTriple {
  std::size_t field_a = 0;
  std::size_t field_b = 1;
  std::size_t field_c = 2;
  double scale = 1.0;
};

struct SyntheticSpec {
  std::size_t fields = 10;
  std::uint32_t cardinality = 20;
  std::size_t n_train = 100000;
  std::size_t n_test = 20000;
  std::vector<PlantedPair> pairs;
  std::vector<PlantedTriple> triples;
  double linear_scale = 0.5;
  double noise_scale = 0.0;
  double bias = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (fields < 1) throw ConfigError("synthetic spec needs >= 1 field");
    if (cardinality < 1) throw ConfigError("synthetic cardinality must be >= 1");
    auto check_field = [this](std::size_t f) {
      if (f >= fields) {
        throw ConfigError("planted interaction references field " + std::to_string(f) +
                          " out of " + std::to_string(fields));
      }
    };
    for (const auto& p : pairs) {
      check_field(p.field_a);
      check_field(p.field_b);
      if (p.field_a == p.field_b) throw ConfigError("planted pair uses one field twice");
    }
    for (const auto& t : triples) {
      check_field(t.field_a);
      check_field(t.field_b);
      check_field(t.field_c);
      if (t.field_a == t.field_b || t.field_a == t.field_c || t.field_b == t.field_c) {
        throw ConfigError("planted triple repeats a field");
      }
    }
  }

  static SyntheticSpec from_json(const nlohmann::json& j) {
    SyntheticSpec spec;
    spec.fields = j.value("fields", std::size_t(10));
    spec.cardinality = j.value("cardinality", 20u);
    spec.n_train = j.value("n_train", std::size_t(100000));
    spec.n_test = j.value("n_test", std::size_t(20000));
    spec.linear_scale = j.value("linear_scale", 0.5);
    spec.noise_scale = j.value("noise_scale", 0.0);
    spec.bias = j.value("bias", 0.0);
    spec.seed = j.value("seed", std::uint64_t(1));
    if (j.contains("pairs")) {
      for (const auto& jp : j.at("pairs")) {
        spec.pairs.push_back(PlantedPair{jp.at(0).get<std::size_t>(),
                                         jp.at(1).get<std::size_t>(),
                                         jp.at(2).get<double>()});
      }
    }
    if (j.contains("triples")) {
      for (const auto& jt : j.at("triples")) {
        spec.triples.push_back(PlantedTriple{jt.at(0).get<std::size_t>(),
                                             jt.at(1).get<std::size_t>(),
                                             jt.at(2).get<std::size_t>(),
                                             jt.at(3).get<double>()});
      }
    }
    spec.validate();
    return spec;
  }
};

// The drawn ground-truth weights behind a synthetic draw. Pair and triple
// interactions are rank-1 factor products with centered factors, so their
// lower-order marginals carry (close to) no signal.
struct SyntheticTruth {
  std::vector<std::vector<double>> linear;               // [field][value]
  std::vector<std::vector<std::vector<double>>> pair_f;  // [pair][0|1][value]
  std::vector<std::vector<std::vector<double>>> triple_f;
};

struct SyntheticData {
  FeatureSchema schema;
  std::vector<SparseInstance> train;
  std::vector<SparseInstance> test;
  std::vector<double> true_logits_test;  // Bayes-optimal scores for the test draw
  SyntheticTruth truth;
};

namespace detail {

inline std::vector<double> centered_factor(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  double mean = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    mean += x;
  }
  mean /= static_cast<double>(n);
  for (auto& x : v) x -= mean;
  return v;
}

}  // namespace detail

inline std::string synthetic_token(std::uint32_t value) {
  return "v" + std::to_string(value);
}

// Uniform features per field; the true logit is linear + planted rank-1
// pair/triple terms + Gaussian noise; labels are Bernoulli(sigmoid(logit)).
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng root(spec.seed);
  Rng truth_rng = root.split(1);
  Rng draw_rng = root.split(2);

  SyntheticTruth truth;
  truth.linear.resize(spec.fields);
  for (auto& lw : truth.linear) {
    lw = detail::centered_factor(spec.cardinality, truth_rng);
    for (auto& x : lw) x *= spec.linear_scale;
  }
  for (std::size_t p = 0; p < spec.pairs.size(); ++p) {
    truth.pair_f.push_back({detail::centered_factor(spec.cardinality, truth_rng),
                            detail::centered_factor(spec.cardinality, truth_rng)});
  }
  for (std::size_t t = 0; t < spec.triples.size(); ++t) {
    truth.triple_f.push_back({detail::centered_factor(spec.cardinality, truth_rng),
                              detail::centered_factor(spec.cardinality, truth_rng),
                              detail::centered_factor(spec.cardinality, truth_rng)});
  }

  // schema over m categorical fields with tokens v0..v{c-1}, no UNKNOWN slot
  std::vector<FieldSpec> fields(spec.fields);
  for (std::size_t f = 0; f < spec.fields; ++f) {
    fields[f].name = "f" + std::to_string(f);
    fields[f].kind = FieldKind::kCategorical;
    fields[f].has_unknown = false;
    for (std::uint32_t v = 0; v < spec.cardinality; ++v) {
      fields[f].vocab.emplace(synthetic_token(v), 0);
    }
    std::uint32_t next = 0;
    for (auto& [tok, idx] : fields[f].vocab) {
      (void)tok;
      idx = next++;
    }
  }
  SchemaOptions opts;
  opts.reserve_unknown = false;
  SyntheticData data{FeatureSchema(std::move(fields), opts), {}, {}, {}, std::move(truth)};

  auto draw_split = [&](std::size_t n, std::vector<SparseInstance>& out,
                        std::vector<double>* logits_out) {
    out.reserve(n);
    if (logits_out != nullptr) logits_out->reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint32_t> values(spec.fields);
      for (std::size_t f = 0; f < spec.fields; ++f) {
        values[f] = static_cast<std::uint32_t>(draw_rng.uniform_int(spec.cardinality));
      }
      double logit = spec.bias;
      for (std::size_t f = 0; f < spec.fields; ++f) {
        logit += data.truth.linear[f][values[f]];
      }
      for (std::size_t p = 0; p < spec.pairs.size(); ++p) {
        const auto& ps = spec.pairs[p];
        logit += ps.scale * data.truth.pair_f[p][0][values[ps.field_a]] *
                 data.truth.pair_f[p][1][values[ps.field_b]];
      }
      for (std::size_t t = 0; t < spec.triples.size(); ++t) {
        const auto& ts = spec.triples[t];
        logit += ts.scale * data.truth.triple_f[t][0][values[ts.field_a]] *
                 data.truth.triple_f[t][1][values[ts.field_b]] *
                 data.truth.triple_f[t][2][values[ts.field_c]];
      }
      if (spec.noise_scale > 0.0) logit += spec.noise_scale * draw_rng.normal();

      SparseInstance inst;
      inst.ids.resize(spec.fields);
      inst.values.assign(spec.fields, 1.0f);
      for (std::size_t f = 0; f < spec.fields; ++f) {
        const auto& vocab = data.schema.field(f).vocab;
        inst.ids[f] = data.schema.global_id(f, vocab.at(synthetic_token(values[f])));
      }
      inst.label = draw_rng.bernoulli(sigmoid(logit)) ? 1 : 0;
      out.push_back(std::move(inst));
      if (logits_out != nullptr) logits_out->push_back(logit);
    }
  };

  draw_split(spec.n_train, data.train, nullptr);
  draw_split(spec.n_test, data.test, &data.true_logits_test);
  return data;
}

// Writes a synthetic split back out as raw delimited text (label first).
inline void write_synthetic_tsv(const SyntheticData& data,
                                const std::vector<SparseInstance>& split,
                                const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "'");
  const char delim = data.schema.options().delimiter;
  for (const auto& inst : split) {
    out << static_cast<int>(inst.label);
    for (std::size_t f = 0; f < inst.ids.size(); ++f) {
      const auto [field, local] = data.schema.locate(inst.ids[f]);
      for (const auto& [tok, idx] : data.schema.field(field).vocab) {
        if (idx == local) {
          out << delim << tok;
          break;
        }
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure on '" + path + "'");
}

// --- typed users and recommendation lists -----------------------------------

struct App {
  std::uint32_t id = 0;
  std::uint32_t type = 0;
  double downloads = 0.0;
};

struct AppCatalog {
  std::vector<App> apps;
  std::uint32_t type_count = 0;

  double d_max() const {
    double m = 0.0;
    for (const auto& a : apps) m = std::max(m, a.downloads);
    return m;
  }

  std::vector<std::vector<std::uint32_t>> pools_by_type() const {
    std::vector<std::vector<std::uint32_t>> pools(type_count);
    for (const auto& a : apps) pools[a.type].push_back(a.id);
    return pools;
  }

  nlohmann::json to_json() const {
    nlohmann::json japps = nlohmann::json::array();
    for (const auto& a : apps) {
      japps.push_back({{"id", a.id}, {"type", a.type}, {"downloads", a.downloads}});
    }
    return nlohmann::json{{"type_count", type_count}, {"apps", std::move(japps)}};
  }

  static AppCatalog from_json(const nlohmann::json& j) {
    AppCatalog cat;
    cat.type_count = j.at("type_count").get<std::uint32_t>();
    for (const auto& ja : j.at("apps")) {
      cat.apps.push_back(App{ja.at("id").get<std::uint32_t>(),
                             ja.at("type").get<std::uint32_t>(),
                             ja.at("downloads").get<double>()});
    }
    for (std::size_t i = 0; i < cat.apps.size(); ++i) {
      if (cat.apps[i].id != i) throw ConfigError("catalog app ids must be 0..n-1 in order");
      if (cat.apps[i].type >= cat.type_count) {
        throw ConfigError("catalog app type out of range");
      }
    }
    return cat;
  }
};

// Apps spread round-robin over types with heavy-tailed download counts.
inline AppCatalog generate_catalog(std::size_t n_apps, std::uint32_t types,
                                   double max_downloads, std::uint64_t seed) {
  if (types == 0 || n_apps < types) throw ConfigError("catalog needs >= 1 app per type");
  AppCatalog cat;
  cat.type_count = types;
  Rng rng = Rng(seed).split(0xCA7);
  cat.apps.resize(n_apps);
  for (std::size_t i = 0; i < n_apps; ++i) {
    const double u = rng.uniform();
    cat.apps[i] = App{static_cast<std::uint32_t>(i),
                      static_cast<std::uint32_t>(i % types),
                      std::floor(max_downloads * u * u * u) + 1.0};
  }
  return cat;
}

struct User {
  std::uint32_t id = 0;
  std::uint32_t type = 0;
  std::vector<std::uint32_t> history;  // app ids of the user's own type
};

struct UserGroupSet {
  std::uint32_t types = 0;
  std::uint32_t per_type = 0;
  std::vector<User> users;  // grouped: users[i*n+j] is user j of type i
};

// t types, n users each; a user's history is sampled without replacement
// from the pool of apps of the user's type.
inline UserGroupSet generate_users(std::uint32_t t, std::uint32_t n,
                                   const AppCatalog& catalog, std::size_t history_len,
                                   std::uint64_t seed) {
  if (t == 0 || n == 0) throw ConfigError("need at least one user of one type");
  if (t > catalog.type_count) {
    throw ConfigError("requested " + std::to_string(t) + " user types, catalog has " +
                      std::to_string(catalog.type_count));
  }
  const auto pools = catalog.pools_by_type();
  for (std::uint32_t i = 0; i < t; ++i) {
    if (pools[i].size() < history_len) {
      throw ConfigError("type " + std::to_string(i) + " pool of " +
                        std::to_string(pools[i].size()) +
                        " apps cannot supply a history of " +
                        std::to_string(history_len));
    }
  }
  UserGroupSet set;
  set.types = t;
  set.per_type = n;
  set.users.reserve(static_cast<std::size_t>(t) * n);
  Rng rng = Rng(seed).split(0x05E5);
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      User user;
      user.id = i * n + j;
      user.type = i;
      std::vector<std::uint32_t> pool = pools[i];
      for (std::size_t h = 0; h < history_len; ++h) {
        const std::size_t pick = rng.uniform_int(pool.size() - h) + h;
        std::swap(pool[h], pool[pick]);
        user.history.push_back(pool[h]);
      }
      set.users.push_back(std::move(user));
    }
  }
  return set;
}

// Field layout for user-item instances: one field per history slot, then the
// candidate app id and the candidate app type. Exactly one active feature
// per field.
struct RecEncoding {
  std::size_t history_len = 0;
  std::uint32_t n_apps = 0;
  std::uint32_t n_types = 0;

  std::size_t field_count() const { return history_len + 2; }
  std::size_t feature_count() const {
    return (history_len + 1) * n_apps + n_types;
  }

  SparseInstance make_instance(const User& user, const App& app,
                               std::uint8_t label = 0) const {
    if (user.history.size() != history_len) {
      throw DimensionError("user history length " + std::to_string(user.history.size()) +
                           " vs encoding " + std::to_string(history_len));
    }
    SparseInstance inst;
    inst.label = label;
    inst.ids.resize(field_count());
    inst.values.assign(field_count(), 1.0f);
    for (std::size_t h = 0; h < history_len; ++h) {
      inst.ids[h] = static_cast<std::uint32_t>(h) * n_apps + user.history[h];
    }
    inst.ids[history_len] = static_cast<std::uint32_t>(history_len) * n_apps + app.id;
    inst.ids[history_len + 1] =
        static_cast<std::uint32_t>((history_len + 1)) * n_apps + app.type;
    return inst;
  }
};

struct RecommendationList {
  std::uint32_t user_id = 0;
  std::vector<std::uint32_t> ranked_apps;  // descending score, ties by app id
  std::vector<double> downloads;           // D_k aligned with ranked_apps
};

// Scores every candidate for every user and sorts descending; ties break
// toward the smaller app id.
inline std::vector<RecommendationList> recommend(const Model& model,
                                                 const UserGroupSet& users,
                                                 const AppCatalog& catalog,
                                                 const RecEncoding& enc) {
  std::vector<RecommendationList> lists;
  lists.reserve(users.users.size());
  for (const User& user : users.users) {
    Batch batch;
    batch.instances.reserve(catalog.apps.size());
    for (const App& app : catalog.apps) {
      batch.instances.push_back(enc.make_instance(user, app));
    }
    const std::vector<double> scores = model.predict(batch);
    std::vector<std::uint32_t> order(catalog.apps.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](std::uint32_t a, std::uint32_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    RecommendationList list;
    list.user_id = user.id;
    list.ranked_apps = std::move(order);
    list.downloads.reserve(catalog.apps.size());
    for (std::uint32_t app : list.ranked_apps) {
      list.downloads.push_back(catalog.apps[app].downloads);
    }
    lists.push_back(std::move(list));
  }
  return lists;
}

// --- list metrics -----------------------------------------------------------

namespace detail {

inline std::vector<std::uint32_t> top_l_sorted(const RecommendationList& list,
                                               std::size_t L) {
  if (list.ranked_apps.size() < L) {
    throw ConfigError("recommendation list of " + std::to_string(list.ranked_apps.size()) +
                      " apps is shorter than L=" + std::to_string(L));
  }
  std::vector<std::uint32_t> top(list.ranked_apps.begin(), list.ranked_apps.begin() + L);
  std::sort(top.begin(), top.end());
  return top;
}

inline std::size_t intersection_size(const std::vector<std::uint32_t>& a,
                                     const std::vector<std::uint32_t>& b) {
  std::size_t count = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

}  // namespace detail

// Aggregated cross-group top-L dissimilarity:
//   h_ab = 1 - q_ab(L)/L over user pairs, averaged within each group pair,
//   then averaged over the t(t-1)/2 group pairs.
// q counts common items regardless of position.
inline double personalization_at(const std::vector<RecommendationList>& lists,
                                 const UserGroupSet& groups, std::size_t L) {
  if (groups.types < 2) throw ConfigError("personalization needs >= 2 user groups");
  if (lists.size() != groups.users.size()) {
    throw ConfigError("list count does not match user count");
  }
  std::vector<std::vector<std::uint32_t>> tops(lists.size());
  for (std::size_t u = 0; u < lists.size(); ++u) {
    tops[u] = detail::top_l_sorted(lists[u], L);
  }
  const std::size_t t = groups.types;
  const std::size_t n = groups.per_type;
  double group_pair_sum = 0.0;
  for (std::size_t gi = 0; gi < t; ++gi) {
    for (std::size_t gj = gi + 1; gj < t; ++gj) {
      double pair_sum = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          const auto& ta = tops[gi * n + a];
          const auto& tb = tops[gj * n + b];
          const double q = static_cast<double>(detail::intersection_size(ta, tb));
          pair_sum += 1.0 - q / static_cast<double>(L);
        }
      }
      group_pair_sum += pair_sum / static_cast<double>(n * n);
    }
  }
  return 2.0 / (static_cast<double>(t) * static_cast<double>(t - 1)) * group_pair_sum;
}

// Fraction of the candidate catalog appearing in any user's top-L.
inline double coverage_at(const std::vector<RecommendationList>& lists,
                          std::size_t candidate_count, std::size_t L) {
  if (candidate_count == 0) throw ConfigError("coverage needs a non-empty catalog");
  std::set<std::uint32_t> seen;
  for (const auto& list : lists) {
    const auto top = detail::top_l_sorted(list, L);
    seen.insert(top.begin(), top.end());
  }
  return static_cast<double>(seen.size()) / static_cast<double>(candidate_count);
}

struct PopularityResult {
  double mean = 0.0;      // (1/(t*n*L)) sum of D_k / D_max
  double variance = 0.0;  // across per-list means
};

inline PopularityResult popularity_at(const std::vector<RecommendationList>& lists,
                                      std::size_t L, double d_max) {
  if (!(d_max > 0.0)) throw ConfigError("popularity needs D_max > 0");
  if (lists.empty()) throw ConfigError("popularity needs at least one list");
  std::vector<double> per_list(lists.size());
  for (std::size_t u = 0; u < lists.size(); ++u) {
    if (lists[u].ranked_apps.size() < L) {
      throw ConfigError("recommendation list shorter than L");
    }
    double s = 0.0;
    for (std::size_t r = 0; r < L; ++r) s += lists[u].downloads[r] / d_max;
    per_list[u] = s / static_cast<double>(L);
  }
  PopularityResult res;
  for (double v : per_list) res.mean += v;
  res.mean /= static_cast<double>(per_list.size());
  for (double v : per_list) res.variance += (v - res.mean) * (v - res.mean);
  res.variance /= static_cast<double>(per_list.size());
  return res;
}

inline double ctr_ratio(double downloads, double impressions) {
  if (!(impressions > 0.0)) throw ConfigError("ctr needs impressions > 0");
  return downloads / impressions;
}

inline double cvr_ratio(double downloads, double users) {
  if (!(users > 0.0)) throw ConfigError("cvr needs users > 0");
  return downloads / users;
}

// --- A/B comparison ----------------------------------------------------------

struct AbTraffic {
  double impressions = 0.0;
  double downloads = 0.0;
  double users = 0.0;
};

struct AbRow {
  std::size_t L = 0;
  double personalization_a = 0.0, personalization_b = 0.0;
  double coverage_a = 0.0, coverage_b = 0.0;
  PopularityResult popularity_a, popularity_b;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"L", L},
        {"personalization", {{"a", personalization_a}, {"b", personalization_b},
                             {"delta", personalization_b - personalization_a}}},
        {"coverage", {{"a", coverage_a}, {"b", coverage_b},
                      {"delta", coverage_b - coverage_a}}},
        {"popularity", {{"a", popularity_a.mean}, {"b", popularity_b.mean},
                        {"a_variance", popularity_a.variance},
                        {"b_variance", popularity_b.variance},
                        {"delta", popularity_b.mean - popularity_a.mean}}}};
  }
};

struct AbReport {
  std::vector<AbRow> rows;
  // simulated traffic counters when a serving simulation ran
  bool has_traffic = false;
  AbTraffic traffic_a, traffic_b;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) j["rows"].push_back(r.to_json());
    if (has_traffic) {
      j["ctr"] = {{"a", ctr_ratio(traffic_a.downloads, traffic_a.impressions)},
                  {"b", ctr_ratio(traffic_b.downloads, traffic_b.impressions)}};
      j["cvr"] = {{"a", cvr_ratio(traffic_a.downloads, traffic_a.users)},
                  {"b", cvr_ratio(traffic_b.downloads, traffic_b.users)}};
    }
    return j;
  }
};

inline AbReport ab_report(const std::vector<RecommendationList>& lists_a,
                          const std::vector<RecommendationList>& lists_b,
                          const UserGroupSet& groups, std::size_t candidate_count,
                          double d_max, const std::vector<std::size_t>& l_values) {
  if (lists_a.size() != lists_b.size() || lists_a.size() != groups.users.size()) {
    throw ConfigError("ab_report requires both list sets over the same users");
  }
  for (std::size_t u = 0; u < lists_a.size(); ++u) {
    if (lists_a[u].user_id != lists_b[u].user_id) {
      throw ConfigError("ab_report user sets are not aligned");
    }
  }
  AbReport report;
  for (std::size_t L : l_values) {
    AbRow row;
    row.L = L;
    row.personalization_a = personalization_at(lists_a, groups, L);
    row.personalization_b = personalization_at(lists_b, groups, L);
    row.coverage_a = coverage_at(lists_a, candidate_count, L);
    row.coverage_b = coverage_at(lists_b, candidate_count, L);
    row.popularity_a = popularity_at(lists_a, L, d_max);
    row.popularity_b = popularity_at(lists_b, L, d_max);
    report.rows.push_back(row);
  }
  return report;
}

// --- simulated click traffic -------------------------------------------------

struct ClickModel {
  double base = -1.0;        // logit offset
  double match_bonus = 2.0;  // candidate type equals user type
  double pop_weight = 1.0;   // multiplies D_k / D_max

  double click_prob(const User& user, const App& app, double d_max) const {
    const double logit = base + (app.type == user.type ? match_bonus : 0.0) +
                         pop_weight * (app.downloads / d_max);
    return sigmoid(logit);
  }
};

// Random impressions labeled by the click model; this is the training data
// for the recommenders under comparison.
inline std::vector<SparseInstance> generate_click_log(const UserGroupSet& users,
                                                      const AppCatalog& catalog,
                                                      const RecEncoding& enc,
                                                      const ClickModel& click,
                                                      std::size_t impressions_per_user,
                                                      std::uint64_t seed) {
  std::vector<SparseInstance> log;
  log.reserve(users.users.size() * impressions_per_user);
  const double d_max = catalog.d_max();
  Rng rng = Rng(seed).split(0x106);
  for (const User& user : users.users) {
    for (std::size_t i = 0; i < impressions_per_user; ++i) {
      const App& app = catalog.apps[rng.uniform_int(catalog.apps.size())];
      const bool clicked = rng.bernoulli(click.click_prob(user, app, d_max));
      log.push_back(enc.make_instance(user, app, clicked ? 1 : 0));
    }
  }
  return log;
}

// Serves each user their model's top-L list once and draws clicks from the
// click model; returns the traffic counters behind CTR/CVR.
inline AbTraffic simulate_serving(const std::vector<RecommendationList>& lists,
                                  const UserGroupSet& users, const AppCatalog& catalog,
                                  const ClickModel& click, std::size_t L,
                                  std::uint64_t seed) {
  AbTraffic traffic;
  traffic.users = static_cast<double>(users.users.size());
  const double d_max = catalog.d_max();
  Rng rng = Rng(seed).split(0xAB);
  for (std::size_t u = 0; u < users.users.size(); ++u) {
    for (std::size_t r = 0; r < L && r < lists[u].ranked_apps.size(); ++r) {
      traffic.impressions += 1.0;
      const App& app = catalog.apps[lists[u].ranked_apps[r]];
      if (rng.bernoulli(click.click_prob(users.users[u], app, d_max))) {
        traffic.downloads += 1.0;
      }
    }
  }
  return traffic;
}

}  // namespace deepctr
