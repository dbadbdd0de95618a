#include "socrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "model_detail.hpp"

namespace socrec {

namespace {

constexpr std::array<std::string_view, kTableCount> kTableNames = {
    "b_user",       "b_item",       "b_hour",      "b_day",       "b_sec",
    "b_user_item_gender", "b_user_item_age", "b_gender_item", "b_age_item", "b_keyword",
    "b_tag",        "b_tweet",      "q",           "p",           "z_day_minus",
    "z_day_plus",   "z_sec_minus",  "z_sec_plus",  "y_age",       "y_age_gender",
    "y_tweet",      "y_follow",     "y_action",    "y_keyword",   "y_tag",
    "knn_w",        "knn_c",
};

bool is_latent(Table t) {
  switch (t) {
    case Table::q:
    case Table::p:
    case Table::z_day_minus:
    case Table::z_day_plus:
    case Table::z_sec_minus:
    case Table::z_sec_plus:
    case Table::y_age:
    case Table::y_age_gender:
    case Table::y_tweet:
    case Table::y_follow:
    case Table::y_action:
    case Table::y_keyword:
    case Table::y_tag:
      return true;
    default:
      return false;
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void allocate(ParamTable& t, std::size_t rows, std::size_t cols) {
  t.rows = rows;
  t.cols = cols;
  t.values.assign(rows * cols, 0.0);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void add_scaled(std::span<double> out, const double* row, double scale) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += scale * row[k];
}

double predict_into(const MfmModel& model, const Query& query, std::span<double> user_buf,
                    std::span<double> item_buf) {
  double score = bias_term(model, query) + knn_term(model, query);
  if (query.user && query.item) {
    user_vector(model, query.user, user_buf);
    item_vector(model, query.item, query.t, item_buf);
    score += dot(user_buf, item_buf);
  }
  return score;
}

}  // namespace

FeatureFlags FeatureFlags::all() {
  FeatureFlags f;
  f.sns = f.action = f.day = f.second = f.profile = f.tags = f.keywords = f.tweetnum = f.knn =
      true;
  return f;
}

void MfmConfig::validate() const {
  if (latent_dim < 1) throw Error("model: latent_dim must be >= 1");
  if (rho < 0.0 || rho > 1.0) throw Error("model: rho must lie in [0, 1]");
  if (flags.knn && knn_k < 1) throw Error("model: knn_k must be >= 1");
  if (sec_end <= sec_begin) throw Error("model: sec_end must exceed sec_begin");
  if (day_end < day_begin) throw Error("model: day_end must not precede day_begin");
  if (init_scale < 0.0) throw Error("model: init_scale must be >= 0");
}

std::string_view table_name(Table t) { return kTableNames[static_cast<std::size_t>(t)]; }

MfmModel make_model(const Dataset& dataset, std::span<const RatingRecord> training,
                    const MfmConfig& config) {
  config.validate();
  MfmModel m;
  m.config = config;
  if (m.config.day_begin == 0 && m.config.day_end == 0) {
    m.config.day_begin = dataset.window_begin;
    m.config.day_end = dataset.window_end;
  }

  IndexOptions opts;
  opts.self_follow = config.self_follow;
  opts.build_neighbors = config.flags.knn;
  opts.knn_k = config.knn_k;
  opts.rho = config.rho;
  m.index = build_feature_index(dataset, training, opts);

  const std::size_t nu = m.index.users.size();
  const std::size_t ni = m.index.items.size();
  const std::size_t nk = m.index.keywords.size();
  const std::size_t nt = m.index.tags.size();
  const std::size_t d = config.latent_dim;
  const FeatureFlags& f = config.flags;

  allocate(m.table(Table::b_user), nu, 1);
  allocate(m.table(Table::b_item), ni, 1);
  allocate(m.table(Table::q), ni, d);
  allocate(m.table(Table::p), nu, d);
  if (f.second) {
    allocate(m.table(Table::b_hour), kHourBins, 1);
    allocate(m.table(Table::b_sec), ni, 2);
    allocate(m.table(Table::z_sec_minus), ni, d);
    allocate(m.table(Table::z_sec_plus), ni, d);
  }
  if (f.day) {
    allocate(m.table(Table::b_day), ni, 2);
    allocate(m.table(Table::z_day_minus), ni, d);
    allocate(m.table(Table::z_day_plus), ni, d);
  }
  if (f.profile) {
    allocate(m.table(Table::b_user_item_gender), nu, kGenders);
    allocate(m.table(Table::b_user_item_age), nu, kAgeBuckets);
    allocate(m.table(Table::b_gender_item), ni, kGenders);
    allocate(m.table(Table::b_age_item), ni, kAgeBuckets);
    allocate(m.table(Table::y_age), kAgeBuckets, d);
    allocate(m.table(Table::y_age_gender), kAgeBuckets * kGenders, d);
  }
  if (f.keywords) {
    allocate(m.table(Table::b_keyword), nk, 1);
    allocate(m.table(Table::y_keyword), nk, d);
  }
  if (f.tags) {
    allocate(m.table(Table::b_tag), nt, 1);
    allocate(m.table(Table::y_tag), nt, d);
  }
  if (f.tweetnum) {
    allocate(m.table(Table::b_tweet), kTweetBuckets, 1);
    allocate(m.table(Table::y_tweet), kTweetBuckets, d);
  }
  if (f.sns) allocate(m.table(Table::y_follow), nu, d);
  if (f.action) allocate(m.table(Table::y_action), nu, d);
  if (f.knn) {
    allocate(m.table(Table::knn_w), ni, config.knn_k);
    allocate(m.table(Table::knn_c), ni, config.knn_k);
  }
  initialize_parameters(m);

  if (!training.empty()) {
    double positives = 0.0;
    Timestamp first = training.front().timestamp;
    Timestamp last = first;
    for (const auto& r : training) {
      positives += r.result;
      first = std::min(first, r.timestamp);
      last = std::max(last, r.timestamp);
    }
    const double rate = std::clamp(positives / static_cast<double>(training.size()), 1e-6, 1 - 1e-6);
    m.mu = std::log(rate / (1.0 - rate));
    m.provenance = {first, last, training.size()};
  }
  return m;
}

void initialize_parameters(MfmModel& m) {
  const double bound = m.config.init_scale / std::sqrt(static_cast<double>(m.config.latent_dim));
  for (std::size_t k = 0; k < kTableCount; ++k) {
    ParamTable& t = m.tables[k];
    if (!is_latent(static_cast<Table>(k))) {
      std::fill(t.values.begin(), t.values.end(), 0.0);
      continue;
    }
    std::mt19937_64 rng(splitmix64(m.config.seed * 131 + k));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values) v = dist(rng);
  }
}

Query resolve(const MfmModel& model, UserId user, ItemId item, Timestamp t) {
  return Query{model.index.user_row(user), model.index.item_row(item), t};
}

TimeWeights time_weights(const MfmConfig& c, Timestamp t) {
  TimeWeights w;
  if (c.day_end > c.day_begin) {
    const double span = static_cast<double>(c.day_end - c.day_begin);
    const Timestamp tc = std::clamp(t, c.day_begin, c.day_end);
    w.day_minus = static_cast<double>(tc - c.day_begin) / span;
    w.day_plus = static_cast<double>(c.day_end - tc) / span;
  } else {
    w.day_minus = w.day_plus = 0.5;
  }
  const double sspan = static_cast<double>(c.sec_end - c.sec_begin);
  const Timestamp sc = std::clamp(second_of_day(t), c.sec_begin, c.sec_end);
  w.sec_minus = static_cast<double>(sc - c.sec_begin) / sspan;
  w.sec_plus = static_cast<double>(c.sec_end - sc) / sspan;
  w.hour = hour_bin(t);
  return w;
}

double bias_term(const MfmModel& m, const Query& q) {
  if (!q.user && !q.item) return m.mu;
  const FeatureFlags& f = m.config.flags;
  const FeatureIndex& ix = m.index;
  const TimeWeights w = time_weights(m.config, q.t);

  double b = m.mu;
  if (q.user) b += m.table(Table::b_user).values[*q.user];
  if (q.item) b += m.table(Table::b_item).values[*q.item];
  if (f.second) {
    b += m.table(Table::b_hour).values[w.hour - 1];
    if (q.item) {
      const double* s = m.table(Table::b_sec).row(*q.item);
      b += w.sec_minus * s[0] + w.sec_plus * s[1];
    }
  }
  if (f.day && q.item) {
    const double* d = m.table(Table::b_day).row(*q.item);
    b += w.day_minus * d[0] + w.day_plus * d[1];
  }
  if (q.user && q.item) {
    const std::uint32_t u = *q.user;
    const std::uint32_t i = *q.item;
    const std::uint32_t iu = ix.item_user[i];
    if (f.profile) {
      b += m.table(Table::b_user_item_gender).row(u)[ix.user_gender[iu]];
      b += m.table(Table::b_user_item_age).row(u)[ix.user_age[iu]];
      b += m.table(Table::b_gender_item).row(i)[ix.user_gender[u]];
      b += m.table(Table::b_age_item).row(i)[ix.user_age[u]];
    }
    if (f.keywords) {
      const auto& bk = m.table(Table::b_keyword).values;
      detail::for_each_shared_keyword(ix.user_keywords.row(u), ix.item_keywords.row(i),
                                      [&](std::uint32_t k) { b += bk[k]; });
    }
    if (f.tags) {
      const auto& bt = m.table(Table::b_tag).values;
      detail::for_each_shared(ix.user_tags.row(u), ix.item_tags.row(i),
                              [&](std::uint32_t n) { b += bt[n]; });
    }
  }
  if (f.tweetnum && q.user) b += m.table(Table::b_tweet).values[ix.user_tweet[*q.user]];
  return b;
}

void user_vector(const MfmModel& m, std::optional<std::uint32_t> user, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (!user) return;
  const std::uint32_t u = *user;
  const FeatureFlags& f = m.config.flags;
  const FeatureIndex& ix = m.index;

  add_scaled(out, m.table(Table::p).row(u), 1.0);
  if (f.profile) {
    add_scaled(out, m.table(Table::y_age).row(ix.user_age[u]), 1.0);
    add_scaled(out, m.table(Table::y_age_gender).row(
                        detail::age_gender_row(ix.user_age[u], ix.user_gender[u])),
               1.0);
  }
  if (f.tweetnum) add_scaled(out, m.table(Table::y_tweet).row(ix.user_tweet[u]), 1.0);
  if (f.sns) {
    const auto follows = ix.follows.row(u);
    const double scale = detail::set_scale(follows.size(), m.config.alpha_follow);
    for (std::uint32_t k : follows) add_scaled(out, m.table(Table::y_follow).row(k), scale);
  }
  if (f.action) {
    const auto actions = ix.actions.row(u);
    const double scale = detail::set_scale(actions.size(), m.config.alpha_action);
    for (std::uint32_t l : actions) add_scaled(out, m.table(Table::y_action).row(l), scale);
  }
  if (f.keywords) {
    for (const auto& kw : ix.user_keywords.row(u)) {
      add_scaled(out, m.table(Table::y_keyword).row(kw.index), kw.weight);
    }
  }
  if (f.tags) {
    const auto tags = ix.user_tags.row(u);
    const double scale = detail::set_scale(tags.size(), -0.5);
    for (std::uint32_t n : tags) add_scaled(out, m.table(Table::y_tag).row(n), scale);
  }
}

void item_vector(const MfmModel& m, std::optional<std::uint32_t> item, Timestamp t,
                 std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (!item) return;
  const std::uint32_t i = *item;
  const FeatureFlags& f = m.config.flags;
  add_scaled(out, m.table(Table::q).row(i), 1.0);
  if (f.day || f.second) {
    const TimeWeights w = time_weights(m.config, t);
    if (f.day) {
      add_scaled(out, m.table(Table::z_day_minus).row(i), w.day_minus);
      add_scaled(out, m.table(Table::z_day_plus).row(i), w.day_plus);
    }
    if (f.second) {
      add_scaled(out, m.table(Table::z_sec_minus).row(i), w.sec_minus);
      add_scaled(out, m.table(Table::z_sec_plus).row(i), w.sec_plus);
    }
  }
}

double knn_term(const MfmModel& m, const Query& q) {
  if (!m.config.flags.knn || !q.user || !q.item) return 0.0;
  detail::KnnSets sets;
  detail::collect_knn(m, *q.user, *q.item, sets);
  const double* w = m.table(Table::knn_w).row(*q.item);
  const double* c = m.table(Table::knn_c).row(*q.item);
  double out = 0.0;
  if (!sets.rated.empty()) {
    double s = 0.0;
    for (const auto& [slot, resid] : sets.rated) s += resid * w[slot];
    out += s / std::sqrt(static_cast<double>(sets.rated.size()));
  }
  if (!sets.followed.empty()) {
    double s = 0.0;
    for (std::uint32_t slot : sets.followed) s += c[slot];
    out += s / std::sqrt(static_cast<double>(sets.followed.size()));
  }
  return out;
}

double predict(const MfmModel& m, const Query& q) {
  std::vector<double> ubuf(m.dim());
  std::vector<double> ibuf(m.dim());
  return predict_into(m, q, ubuf, ibuf);
}

double predict(const MfmModel& m, UserId user, ItemId item, Timestamp t) {
  return predict(m, resolve(m, user, item, t));
}

double baseline_predict(const MfmModel& m, UserId user, ItemId item) {
  const auto u = m.index.user_row(user);
  const auto i = m.index.item_row(item);
  double x = m.mu;
  if (u) x += m.table(Table::b_user).values[*u];
  if (i) x += m.table(Table::b_item).values[*i];
  if (u && i) {
    const std::size_t d = m.dim();
    x += dot({m.table(Table::q).row(*i), d}, {m.table(Table::p).row(*u), d});
  }
  return sigmoid(x);
}

std::vector<double> score_records(const MfmModel& m, std::span<const RatingRecord> records) {
  std::vector<double> out(records.size());
  const long n = static_cast<long>(records.size());
#pragma omp parallel
  {
    std::vector<double> ubuf(m.dim());
    std::vector<double> ibuf(m.dim());
#pragma omp for schedule(static)
    for (long k = 0; k < n; ++k) {
      const auto& r = records[static_cast<std::size_t>(k)];
      out[static_cast<std::size_t>(k)] =
          predict_into(m, resolve(m, r.user, r.item, r.timestamp), ubuf, ibuf);
    }
  }
  return out;
}

std::vector<double> score_records_serial(const MfmModel& m, std::span<const RatingRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  std::vector<double> ubuf(m.dim());
  std::vector<double> ibuf(m.dim());
  for (const auto& r : records) {
    out.push_back(predict_into(m, resolve(m, r.user, r.item, r.timestamp), ubuf, ibuf));
  }
  return out;
}

}  // namespace socrec
