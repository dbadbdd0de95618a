#include "socrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace socrec {

namespace {

constexpr int kTagsPerCluster = 10;
constexpr int kGenericTags = 20;
constexpr int kKeywordsPerCluster = 30;
constexpr int kGenericKeywords = 100;
constexpr double kFactorScale = 1.5;
constexpr double kFactorNoise = 0.35;
constexpr Timestamp kMinSessionGap = 2 * kSecondsPerHour;

struct Skeleton {
  RatingRecord record;
  double score = 0.0;  // affinity plus per-record noise
  bool attentive = false;
  std::uint32_t session = 0;
};

std::vector<double> normalized_weights(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> w(0.2, 1.0);
  std::vector<double> out(n);
  double sq = 0.0;
  for (auto& v : out) {
    v = w(rng);
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  for (auto& v : out) v /= norm;
  return out;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_users < 1 || n_items < 1 || n_records < 1 || latent_dim < 1) {
    throw Error("synthetic config: counts must be >= 1");
  }
  if (n_items > n_users) throw Error("synthetic config: n_items must not exceed n_users");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) {
    throw Error("synthetic config: positive_rate must lie in (0, 1)");
  }
  if (noise_level < 0.0 || noise_level > 1.0) {
    throw Error("synthetic config: noise_level must lie in [0, 1]");
  }
  if (train_days < 1 || test_days < 0) throw Error("synthetic config: invalid day counts");
  if (attention_rate <= 0.0 || attention_rate > 1.0) {
    throw Error("synthetic config: attention_rate must lie in (0, 1]");
  }
  if (cold_user_fraction < 0.0 || cold_user_fraction >= 1.0) {
    throw Error("synthetic config: cold_user_fraction must lie in [0, 1)");
  }
  if (mean_session_length < 1.0) throw Error("synthetic config: mean_session_length must be >= 1");
  if (!(activity_spread >= 0.0)) throw Error("synthetic config: activity_spread must be >= 0");
  if (!(idle_trending_share >= 0.0 && idle_trending_share <= 1.0)) {
    throw Error("synthetic config: idle_trending_share must lie in [0, 1]");
  }
  if (!(user_bias_spread >= 0.0)) throw Error("synthetic config: user_bias_spread must be >= 0");
}

double PlantedTruth::affinity(UserId u, ItemId i) const {
  const double* p = &user_factors[(u - 1) * latent_dim];
  const double* q = &item_factors[(i - 1) * latent_dim];
  double dot = 0.0;
  for (std::size_t k = 0; k < latent_dim; ++k) dot += p[k] * q[k];
  return dot + item_bias[i - 1] + user_bias[u - 1];
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t nu = cfg.n_users;
  const std::size_t ni = cfg.n_items;
  const std::size_t dim = cfg.latent_dim;
  const int clusters = static_cast<int>(dim);

  SyntheticData out;
  PlantedTruth& truth = out.truth;
  truth.latent_dim = dim;
  truth.user_factors.assign(nu * dim, 0.0);
  truth.item_factors.assign(ni * dim, 0.0);
  truth.item_bias.assign(ni, 0.0);
  truth.item_cluster.assign(ni, 0);
  truth.user_cluster.assign(nu, 0);
  truth.user_bias.assign(nu, 0.0);

  std::uniform_int_distribution<int> pick_cluster(0, clusters - 1);
  for (std::size_t k = 0; k < ni; ++k) {
    const int c = pick_cluster(rng);
    truth.item_cluster[k] = c;
    for (std::size_t j = 0; j < dim; ++j) {
      truth.item_factors[k * dim + j] =
          (static_cast<int>(j) == c ? kFactorScale : 0.0) + kFactorNoise * gauss(rng);
    }
    truth.item_bias[k] = 0.5 * gauss(rng);
  }
  for (std::size_t u = 0; u < nu; ++u) {
    // Item accounts keep their item cluster so profile and content agree.
    const int c = u < ni ? truth.item_cluster[u] : pick_cluster(rng);
    truth.user_cluster[u] = c;
    for (std::size_t j = 0; j < dim; ++j) {
      truth.user_factors[u * dim + j] =
          (static_cast<int>(j) == c ? kFactorScale : 0.0) + kFactorNoise * gauss(rng);
    }
    if (cfg.user_bias_spread > 0.0) truth.user_bias[u] = cfg.user_bias_spread * gauss(rng);
  }

  Dataset& data = out.dataset;
  const auto cluster_tag = [&](int c) {
    return static_cast<TagId>(1 + c * kTagsPerCluster) +
           static_cast<TagId>(rng() % kTagsPerCluster);
  };
  const auto generic_tag = [&] {
    return static_cast<TagId>(1 + clusters * kTagsPerCluster) +
           static_cast<TagId>(rng() % kGenericTags);
  };
  const auto cluster_keyword = [&](int c) {
    return static_cast<KeywordId>(1 + c * kKeywordsPerCluster) +
           static_cast<KeywordId>(rng() % kKeywordsPerCluster);
  };
  const auto generic_keyword = [&] {
    return static_cast<KeywordId>(1 + clusters * kKeywordsPerCluster) +
           static_cast<KeywordId>(rng() % kGenericKeywords);
  };

  // Profiles.
  std::poisson_distribution<int> tag_count(1.5);
  std::uniform_int_distribution<int> kw_count(2, 8);
  std::uniform_int_distribution<int> year(1955, 2005);
  for (std::size_t u = 0; u < nu; ++u) {
    const UserId id = static_cast<UserId>(u + 1);
    const int c = truth.user_cluster[u];
    UserProfile p;
    p.birth_year = unit(rng) < 0.05 ? 0 : year(rng);
    const double g = unit(rng);
    p.gender = g < 0.45 ? Gender::male : g < 0.9 ? Gender::female : g < 0.95 ? Gender::other
                                                                              : Gender::unknown;
    p.tweet_count = static_cast<std::uint64_t>(std::exp(4.0 + 2.0 * gauss(rng)));
    const int ntags = u < ni ? 2 + static_cast<int>(rng() % 4) : tag_count(rng);
    for (int t = 0; t < ntags; ++t) {
      p.tags.push_back(unit(rng) < 0.75 ? cluster_tag(c) : generic_tag());
    }
    std::sort(p.tags.begin(), p.tags.end());
    p.tags.erase(std::unique(p.tags.begin(), p.tags.end()), p.tags.end());

    std::vector<KeywordId> kws;
    const int nkw = kw_count(rng);
    for (int k = 0; k < nkw; ++k) {
      kws.push_back(unit(rng) < 0.75 ? cluster_keyword(c) : generic_keyword());
    }
    std::sort(kws.begin(), kws.end());
    kws.erase(std::unique(kws.begin(), kws.end()), kws.end());
    const auto weights = normalized_weights(rng, kws.size());
    for (std::size_t k = 0; k < kws.size(); ++k) p.keywords.push_back({kws[k], weights[k]});
    data.profiles.emplace(id, std::move(p));
  }

  // Item metadata: category path and content keywords.
  for (std::size_t k = 0; k < ni; ++k) {
    const int c = truth.item_cluster[k];
    ItemInfo info;
    info.category = std::to_string(c + 1) + "." + std::to_string(1 + rng() % 4) + "." +
                    std::to_string(1 + rng() % 8);
    const int nkw = 3 + static_cast<int>(rng() % 4);
    for (int j = 0; j < nkw; ++j) {
      info.keywords.push_back(unit(rng) < 0.85 ? cluster_keyword(c) : generic_keyword());
    }
    std::sort(info.keywords.begin(), info.keywords.end());
    info.keywords.erase(std::unique(info.keywords.begin(), info.keywords.end()),
                        info.keywords.end());
    data.items.emplace(static_cast<ItemId>(k + 1), std::move(info));
  }

  // Exposure distribution per user: softmax of sharpness * affinity.
  std::vector<double> cdf(ni);
  const auto build_cdf = [&](UserId u, double sharpness) {
    double acc = 0.0;
    double mx = -1e300;
    for (std::size_t k = 0; k < ni; ++k) {
      mx = std::max(mx, truth.affinity(u, static_cast<ItemId>(k + 1)));
    }
    for (std::size_t k = 0; k < ni; ++k) {
      const ItemId item = static_cast<ItemId>(k + 1);
      acc += item == u ? 0.0 : std::exp(sharpness * (truth.affinity(u, item) - mx));
      cdf[k] = acc;
    }
  };
  const auto draw_item = [&]() -> ItemId {
    const double x = unit(rng) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), ni - 1);
    return static_cast<ItemId>(k + 1);
  };

  // Trending lists, redrawn every week, independent of item quality.
  const int weeks = (cfg.train_days + cfg.test_days + 6) / 7;
  std::vector<std::vector<double>> trending(static_cast<std::size_t>(weeks), std::vector<double>(ni));
  for (auto& w : trending) {
    double acc = 0.0;
    for (std::size_t k = 0; k < ni; ++k) w[k] = acc += std::exp(1.5 * gauss(rng));
  }
  const auto draw_trending = [&](UserId u, Timestamp t) -> ItemId {
    const auto week = std::min<std::size_t>(
        static_cast<std::size_t>((t - cfg.start_time) / (7 * kSecondsPerDay)), trending.size() - 1);
    const auto& w = trending[week];
    for (;;) {
      const double x = unit(rng) * w.back();
      const auto it = std::upper_bound(w.begin(), w.end(), x);
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - w.begin()), ni - 1);
      if (static_cast<UserId>(k + 1) != u || ni == 1) return static_cast<ItemId>(k + 1);
    }
  };

  // Social graph: follows lean toward high-affinity items, actions toward
  // a subset of followees.
  std::poisson_distribution<int> follow_count(cfg.mean_follows);
  std::poisson_distribution<int> random_follow_count(2.0);
  for (std::size_t u = 0; u < nu; ++u) {
    const UserId id = static_cast<UserId>(u + 1);
    if (ni < 2 && id == 1) continue;
    build_cdf(id, 1.5);
    std::vector<UserId> follows;
    const int nf = 1 + follow_count(rng);
    for (int f = 0; f < nf; ++f) follows.push_back(draw_item());
    if (nu > ni) {
      const int nr = random_follow_count(rng);
      std::uniform_int_distribution<UserId> other(static_cast<UserId>(ni + 1),
                                                  static_cast<UserId>(nu));
      for (int f = 0; f < nr; ++f) {
        const UserId v = other(rng);
        if (v != id) follows.push_back(v);
      }
    }
    std::sort(follows.begin(), follows.end());
    follows.erase(std::unique(follows.begin(), follows.end()), follows.end());

    std::vector<ActionEdge> actions;
    for (UserId v : follows) {
      if (unit(rng) >= 0.4) continue;
      ActionEdge e;
      e.target = v;
      e.counts.at = std::poisson_distribution<std::uint32_t>(1.0)(rng);
      e.counts.retweet = std::poisson_distribution<std::uint32_t>(2.0)(rng);
      e.counts.comment = std::poisson_distribution<std::uint32_t>(1.0)(rng);
      actions.push_back(e);
    }
    if (unit(rng) < 0.3) {
      std::uniform_int_distribution<UserId> any(1, static_cast<UserId>(nu));
      const UserId v = any(rng);
      if (v != id && !std::binary_search(follows.begin(), follows.end(), v)) {
        ActionEdge e;
        e.target = v;
        e.counts.comment = 1 + std::poisson_distribution<std::uint32_t>(1.0)(rng);
        actions.push_back(e);
        std::sort(actions.begin(), actions.end(),
                  [](const ActionEdge& a, const ActionEdge& b) { return a.target < b.target; });
      }
    }
    if (!follows.empty()) data.graph.follows.emplace(id, std::move(follows));
    if (!actions.empty()) data.graph.actions.emplace(id, std::move(actions));
  }

  // Sessions and recommendation records.
  const Timestamp train_end = cfg.start_time + cfg.train_days * kSecondsPerDay;
  const Timestamp horizon_end = train_end + cfg.test_days * kSecondsPerDay;
  const double warm_share = 1.0 - cfg.cold_user_fraction;
  const double records_per_warm_user =
      static_cast<double>(cfg.n_records) / (static_cast<double>(nu) * warm_share);
  const double sessions_per_warm_user = 1.2 * records_per_warm_user / cfg.mean_session_length *
                                        static_cast<double>(cfg.train_days + cfg.test_days) /
                                        cfg.train_days;

  std::vector<UserId> order(nu);
  std::iota(order.begin(), order.end(), UserId{1});
  std::shuffle(order.begin(), order.end(), rng);

  std::geometric_distribution<int> extra_len(1.0 / cfg.mean_session_length);
  std::uniform_int_distribution<Timestamp> attentive_gap(10, 50);
  std::uniform_int_distribution<Timestamp> idle_gap(1, 15);

  std::vector<Skeleton> train_records;
  std::uint32_t session_counter = 0;
  std::vector<Skeleton> test_records;
  for (UserId id : order) {
    if (train_records.size() >= cfg.n_records) break;
    const bool cold = unit(rng) < cfg.cold_user_fraction;
    const double activity = sessions_per_warm_user * std::exp(cfg.activity_spread * gauss(rng) -
                                                             0.5 * cfg.activity_spread * cfg.activity_spread);
    const int n_sessions = 1 + std::poisson_distribution<int>(std::max(activity - 1.0, 0.05))(rng);
    const Timestamp lo = cold ? train_end : cfg.start_time;
    if (cold && cfg.test_days == 0) continue;
    std::uniform_int_distribution<Timestamp> start_dist(lo, horizon_end - 1);
    std::vector<Timestamp> starts(n_sessions);
    for (auto& s : starts) s = start_dist(rng);
    std::sort(starts.begin(), starts.end());

    build_cdf(id, cfg.exposure_sharpness);
    std::vector<Skeleton> user_records;
    Timestamp last = std::numeric_limits<Timestamp>::min() / 2;
    for (Timestamp start : starts) {
      ++session_counter;
      Timestamp t = std::max(start, last + kMinSessionGap);
      const bool attentive = unit(rng) < cfg.attention_rate;
      const int len = 1 + extra_len(rng);
      for (int k = 0; k < len; ++k) {
        if (t >= horizon_end) break;
        Skeleton s;
        s.record.user = id;
        s.record.item = !attentive && unit(rng) < cfg.idle_trending_share ? draw_trending(id, t) : draw_item();
        s.record.timestamp = t;
        s.attentive = attentive;
        s.session = session_counter;
        s.score = truth.affinity(id, s.record.item) + 2.0 * cfg.noise_level * gauss(rng);
        user_records.push_back(s);
        last = t;
        const bool swap = unit(rng) < cfg.noise_level;
        t += (attentive != swap) ? attentive_gap(rng) : idle_gap(rng);
      }
    }
    for (const auto& s : user_records) {
      if (s.record.timestamp < train_end) {
        if (train_records.size() < cfg.n_records) train_records.push_back(s);
      } else {
        test_records.push_back(s);
      }
    }
  }

  // Group records into sessions: [begin, end) index ranges.
  const auto session_ranges = [](const std::vector<Skeleton>& records) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t k = 0; k < records.size(); ++k) {
      if (k == 0 || records[k].session != records[k - 1].session) out.push_back({k, k});
      out.back().second = k + 1;
    }
    return out;
  };
  const auto train_sessions = session_ranges(train_records);
  const auto test_sessions = session_ranges(test_records);
  const auto log_sum_exp = [](const std::vector<Skeleton>& records, std::size_t b, std::size_t e) {
    double mx = -1e300;
    for (std::size_t k = b; k < e; ++k) mx = std::max(mx, records[k].score);
    double sum = 0.0;
    for (std::size_t k = b; k < e; ++k) sum += std::exp(records[k].score - mx);
    return mx + std::log(sum);
  };

  // Calibrate the label offset so the expected training positive rate matches.
  const auto expected_rate = [&](double offset) {
    double sum = 0.0;
    if (cfg.session_choice) {
      for (const auto& [b, e] : train_sessions) {
        if (train_records[b].attentive) sum += sigmoid(log_sum_exp(train_records, b, e) + offset);
      }
    } else {
      for (const auto& s : train_records) {
        if (s.attentive) sum += sigmoid(s.score + offset);
      }
    }
    return train_records.empty() ? 0.0 : sum / static_cast<double>(train_records.size());
  };
  if (expected_rate(40.0) < cfg.positive_rate) {
    throw Error("synthetic config: positive_rate is unreachable with this attention_rate");
  }
  double lo_off = -40.0;
  double hi_off = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo_off + hi_off);
    if (expected_rate(mid) < cfg.positive_rate) {
      lo_off = mid;
    } else {
      hi_off = mid;
    }
  }
  truth.label_offset = 0.5 * (lo_off + hi_off);

  // Independent acceptances, or one softmax choice per attentive session.
  const auto label = [&](std::vector<Skeleton>& records,
                         const std::vector<std::pair<std::size_t, std::size_t>>& sessions) {
    for (const auto& [b, e] : sessions) {
      if (!cfg.session_choice) {
        for (std::size_t k = b; k < e; ++k) {
          const double u = unit(rng);
          records[k].record.result =
              records[k].attentive && u < sigmoid(records[k].score + truth.label_offset) ? 1 : 0;
        }
        continue;
      }
      for (std::size_t k = b; k < e; ++k) records[k].record.result = 0;
      const double lse = log_sum_exp(records, b, e);
      const double follow = unit(rng);
      double pick = unit(rng);
      if (!records[b].attentive || follow >= sigmoid(lse + truth.label_offset)) continue;
      for (std::size_t k = b; k < e; ++k) {
        pick -= std::exp(records[k].score - lse);
        if (pick < 0.0 || k + 1 == e) {
          records[k].record.result = 1;
          break;
        }
      }
    }
  };
  label(train_records, train_sessions);
  label(test_records, test_sessions);

  const auto by_user_time = [](const Skeleton& a, const Skeleton& b) {
    if (a.record.user != b.record.user) return a.record.user < b.record.user;
    return a.record.timestamp < b.record.timestamp;
  };
  std::stable_sort(train_records.begin(), train_records.end(), by_user_time);
  for (const auto& s : train_records) {
    data.log.push_back(s.record);
    truth.train_attentive.push_back(s.attentive ? 1 : 0);
  }
  finalize_dataset(data);

  std::stable_sort(test_records.begin(), test_records.end(), by_user_time);
  for (const auto& s : test_records) {
    out.test.push_back(s.record);
    truth.test_attentive.push_back(s.attentive ? 1 : 0);
  }
  return out;
}

}  // namespace socrec
