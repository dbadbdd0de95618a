#include "socrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "model_detail.hpp"
#include "tsv.hpp"

namespace socrec {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// -log sigmoid(x) without overflow.
double neg_log_sigmoid(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0); }

void axpy(double* g, const double* x, double a, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) g[k] += a * x[k];
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Every bias, item-side latent and neighborhood term of one score.
// `pu` is the user vector of the query.
void accumulate_item_side(const MfmModel& m, const Query& q, double coef,
                          const std::vector<double>& pu, SparseGradient& grad) {
  const FeatureFlags& f = m.config.flags;
  const FeatureIndex& ix = m.index;
  const TimeWeights w = time_weights(m.config, q.t);
  const std::size_t d = m.dim();

  if (q.user) grad.row(Table::b_user, *q.user)[0] += coef;
  if (f.tweetnum && q.user) grad.row(Table::b_tweet, ix.user_tweet[*q.user])[0] += coef;
  if (f.second) grad.row(Table::b_hour, static_cast<std::uint32_t>(w.hour - 1))[0] += coef;
  if (!q.item) return;
  const std::uint32_t i = *q.item;

  grad.row(Table::b_item, i)[0] += coef;
  if (f.second) {
    double* g = grad.row(Table::b_sec, i);
    g[0] += coef * w.sec_minus;
    g[1] += coef * w.sec_plus;
  }
  if (f.day) {
    double* g = grad.row(Table::b_day, i);
    g[0] += coef * w.day_minus;
    g[1] += coef * w.day_plus;
  }
  if (!q.user) return;
  const std::uint32_t u = *q.user;
  const std::uint32_t iu = ix.item_user[i];

  if (f.profile) {
    grad.row(Table::b_user_item_gender, u)[ix.user_gender[iu]] += coef;
    grad.row(Table::b_user_item_age, u)[ix.user_age[iu]] += coef;
    grad.row(Table::b_gender_item, i)[ix.user_gender[u]] += coef;
    grad.row(Table::b_age_item, i)[ix.user_age[u]] += coef;
  }
  if (f.keywords) {
    detail::for_each_shared_keyword(ix.user_keywords.row(u), ix.item_keywords.row(i),
                                    [&](std::uint32_t k) { grad.row(Table::b_keyword, k)[0] += coef; });
  }
  if (f.tags) {
    detail::for_each_shared(ix.user_tags.row(u), ix.item_tags.row(i),
                            [&](std::uint32_t n) { grad.row(Table::b_tag, n)[0] += coef; });
  }

  axpy(grad.row(Table::q, i), pu.data(), coef, d);
  if (f.day) {
    axpy(grad.row(Table::z_day_minus, i), pu.data(), coef * w.day_minus, d);
    axpy(grad.row(Table::z_day_plus, i), pu.data(), coef * w.day_plus, d);
  }
  if (f.second) {
    axpy(grad.row(Table::z_sec_minus, i), pu.data(), coef * w.sec_minus, d);
    axpy(grad.row(Table::z_sec_plus, i), pu.data(), coef * w.sec_plus, d);
  }

  if (f.knn) {
    detail::KnnSets sets;
    detail::collect_knn(m, u, i, sets);
    if (!sets.rated.empty()) {
      double* g = grad.row(Table::knn_w, i);
      const double scale = coef / std::sqrt(static_cast<double>(sets.rated.size()));
      for (const auto& [slot, resid] : sets.rated) g[slot] += scale * resid;
    }
    if (!sets.followed.empty()) {
      double* g = grad.row(Table::knn_c, i);
      const double scale = coef / std::sqrt(static_cast<double>(sets.followed.size()));
      for (std::uint32_t slot : sets.followed) g[slot] += scale;
    }
  }
}

// Spreads dL/d(user vector) over the tables that make up the user vector.
void accumulate_user_side(const MfmModel& m, std::uint32_t u, const std::vector<double>& gp,
                          SparseGradient& grad) {
  const FeatureFlags& f = m.config.flags;
  const FeatureIndex& ix = m.index;
  const std::size_t d = m.dim();
  const double* g = gp.data();

  axpy(grad.row(Table::p, u), g, 1.0, d);
  if (f.profile) {
    axpy(grad.row(Table::y_age, ix.user_age[u]), g, 1.0, d);
    axpy(grad.row(Table::y_age_gender, static_cast<std::uint32_t>(
                                           detail::age_gender_row(ix.user_age[u], ix.user_gender[u]))),
         g, 1.0, d);
  }
  if (f.tweetnum) axpy(grad.row(Table::y_tweet, ix.user_tweet[u]), g, 1.0, d);
  if (f.sns) {
    const auto follows = ix.follows.row(u);
    const double scale = detail::set_scale(follows.size(), m.config.alpha_follow);
    for (std::uint32_t k : follows) axpy(grad.row(Table::y_follow, k), g, scale, d);
  }
  if (f.action) {
    const auto actions = ix.actions.row(u);
    const double scale = detail::set_scale(actions.size(), m.config.alpha_action);
    for (std::uint32_t l : actions) axpy(grad.row(Table::y_action, l), g, scale, d);
  }
  if (f.keywords) {
    for (const auto& kw : ix.user_keywords.row(u)) {
      axpy(grad.row(Table::y_keyword, kw.index), g, kw.weight, d);
    }
  }
  if (f.tags) {
    const auto tags = ix.user_tags.row(u);
    const double scale = detail::set_scale(tags.size(), -0.5);
    for (std::uint32_t n : tags) axpy(grad.row(Table::y_tag, n), g, scale, d);
  }
}

void check_finite(const SparseGradient& grad, double loss) {
  bool ok = std::isfinite(loss);
  for (double g : grad.buffer()) ok = ok && std::isfinite(g);
  if (!ok) throw Error("train: non-finite gradient");
}

double score_with(const MfmModel& m, const Query& q, const std::vector<double>& pu,
                  const std::vector<double>& qi) {
  return bias_term(m, q) + knn_term(m, q) + dot(pu, qi);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("train: learning_rate must be > 0");
  if (!(lambda >= 0.0)) throw Error("train: lambda must be >= 0");
  if (epochs < 0) throw Error("train: epochs must be >= 0");
  if (report_every < 0) throw Error("train: report_every must be >= 0");
  for (const auto& [name, value] : lambda_overrides) {
    bool known = false;
    for (std::size_t k = 0; k < kTableCount; ++k) known |= table_name(static_cast<Table>(k)) == name;
    if (!known) throw Error("train: unknown table '" + name + "' in lambda_overrides");
    if (!(value >= 0.0)) throw Error("train: lambda override for " + name + " must be >= 0");
  }
}

std::array<double, kTableCount> TrainConfig::lambdas() const {
  std::array<double, kTableCount> out;
  for (std::size_t k = 0; k < kTableCount; ++k) {
    auto it = lambda_overrides.find(std::string(table_name(static_cast<Table>(k))));
    out[k] = it == lambda_overrides.end() ? lambda : it->second;
  }
  return out;
}

std::vector<TrainingPair> sample_pairs(const FilteredLog& filtered, std::uint64_t seed,
                                       PairStats* stats) {
  std::mt19937_64 rng(mix(seed, 0x5041495253ULL));
  std::vector<TrainingPair> pairs;
  pairs.reserve(filtered.negatives.size());
  PairStats local;

  const auto& pos = filtered.positives;
  std::size_t p = 0;
  for (const auto& neg : filtered.negatives) {
    while (p < pos.size() && pos[p].user < neg.user) ++p;
    std::size_t end = p;
    while (end < pos.size() && pos[end].user == neg.user) ++end;

    std::size_t candidates = 0;
    for (std::size_t k = p; k < end; ++k) candidates += pos[k].item != neg.item;
    if (candidates == 0) {
      ++local.skipped_negatives;
      continue;
    }
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, candidates - 1)(rng);
    for (std::size_t k = p; k < end; ++k) {
      if (pos[k].item == neg.item) continue;
      if (pick-- == 0) {
        pairs.push_back({neg.user, neg.item, pos[k].item, neg.timestamp, pos[k].timestamp});
        break;
      }
    }
  }
  local.pairs = pairs.size();
  if (stats) *stats = local;
  return pairs;
}

double pairwise_prob(const MfmModel& m, const TrainingPair& pair) {
  const double sj = predict(m, pair.user, pair.positive, pair.t_positive);
  const double si = predict(m, pair.user, pair.negative, pair.t_negative);
  return sigmoid(sj - si);
}

double* SparseGradient::row(Table table, std::uint32_t r) {
  const std::uint64_t key = (static_cast<std::uint64_t>(table) << 32) | r;
  auto [it, inserted] = slots_.try_emplace(key, entries_.size());
  if (inserted) {
    const std::size_t cols = model_->table(table).cols;
    entries_.push_back({table, r, buffer_.size()});
    buffer_.resize(buffer_.size() + cols, 0.0);
  }
  return buffer_.data() + entries_[it->second].offset;
}

void SparseGradient::clear() {
  slots_.clear();
  entries_.clear();
  buffer_.clear();
}

void accumulate_score_gradient(const MfmModel& m, const Query& q, double coef,
                               SparseGradient& grad) {
  const std::size_t d = m.dim();
  std::vector<double> pu(d);
  std::vector<double> qi(d);
  user_vector(m, q.user, pu);
  item_vector(m, q.item, q.t, qi);
  accumulate_item_side(m, q, coef, pu, grad);
  if (q.user && q.item) {
    for (auto& v : qi) v *= coef;
    accumulate_user_side(m, *q.user, qi, grad);
  }
}

double pair_gradient(const MfmModel& m, const TrainingPair& pair, SparseGradient& grad) {
  const Query qj = resolve(m, pair.user, pair.positive, pair.t_positive);
  const Query qi = resolve(m, pair.user, pair.negative, pair.t_negative);
  const std::size_t d = m.dim();
  std::vector<double> pu(d);
  std::vector<double> vj(d);
  std::vector<double> vi(d);
  user_vector(m, qj.user, pu);
  item_vector(m, qj.item, qj.t, vj);
  item_vector(m, qi.item, qi.t, vi);

  const double diff = score_with(m, qj, pu, vj) - score_with(m, qi, pu, vi);
  const double loss = neg_log_sigmoid(diff);
  const double e = 1.0 - sigmoid(diff);

  accumulate_item_side(m, qj, -e, pu, grad);
  accumulate_item_side(m, qi, e, pu, grad);
  if (qj.user) {
    std::vector<double> gp(d, 0.0);
    if (qj.item) axpy(gp.data(), vj.data(), -e, d);
    if (qi.item) axpy(gp.data(), vi.data(), e, d);
    accumulate_user_side(m, *qj.user, gp, grad);
  }
  check_finite(grad, loss);
  return loss;
}

double pointwise_gradient(const MfmModel& m, const RatingRecord& r, SparseGradient& grad) {
  const Query q = resolve(m, r.user, r.item, r.timestamp);
  const double p = sigmoid(predict(m, q));
  const double resid = static_cast<double>(r.result) - p;
  accumulate_score_gradient(m, q, -resid * p * (1.0 - p), grad);
  const double loss = 0.5 * resid * resid;
  check_finite(grad, loss);
  return loss;
}

void apply_gradient(MfmModel& m, const SparseGradient& grad, double eta,
                    const std::array<double, kTableCount>& lambdas) {
  for (const auto& e : grad.entries()) {
    ParamTable& t = m.table(e.table);
    const double lambda = lambdas[static_cast<std::size_t>(e.table)];
    double* theta = t.row(e.row);
    const double* g = grad.data(e);
    for (std::size_t c = 0; c < t.cols; ++c) theta[c] -= eta * (g[c] + lambda * theta[c]);
  }
}

double sgd_step(MfmModel& m, const TrainingPair& pair, const TrainConfig& config) {
  SparseGradient grad(m);
  const double loss = pair_gradient(m, pair, grad);
  apply_gradient(m, grad, config.learning_rate, config.lambdas());
  return loss;
}

std::vector<EpochLoss> train(MfmModel& m, const FilteredLog& filtered, const TrainConfig& config) {
  config.validate();
  const auto lambdas = config.lambdas();
  std::vector<EpochLoss> trace;
  SparseGradient grad(m);
  std::vector<RatingRecord> records;
  if (config.objective == Objective::pointwise) records = filtered.merged();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::mt19937_64 rng(mix(config.seed, static_cast<std::uint64_t>(epoch)));
    double total = 0.0;
    std::size_t n = 0;
    try {
      if (config.objective == Objective::pairwise) {
        auto pairs = sample_pairs(filtered, mix(config.seed, 1000003ULL * epoch));
        std::shuffle(pairs.begin(), pairs.end(), rng);
        for (const auto& pair : pairs) {
          grad.clear();
          total += pair_gradient(m, pair, grad);
          apply_gradient(m, grad, config.learning_rate, lambdas);
        }
        n = pairs.size();
      } else {
        std::vector<std::size_t> order(records.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k : order) {
          grad.clear();
          total += pointwise_gradient(m, records[k], grad);
          apply_gradient(m, grad, config.learning_rate, lambdas);
        }
        n = order.size();
      }
    } catch (const Error& e) {
      throw Error("train: epoch " + std::to_string(epoch) + " aborted: " + e.what());
    }
    const double mean = n == 0 ? 0.0 : total / static_cast<double>(n);
    trace.push_back({epoch, mean, n});
    if (config.report_every > 0 && epoch % config.report_every == 0) {
      std::clog << "epoch " << epoch << " mean_loss " << mean << " examples " << n << '\n';
    }
  }
  return trace;
}

void write_loss_trace(const std::vector<EpochLoss>& trace, const std::filesystem::path& file,
                      const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp) << "epoch,mean_loss,pairs\n";
  for (const auto& e : trace) {
    out << e.epoch << ',' << tsv::format_double(e.mean_loss) << ',' << e.pairs << '\n';
  }
}

}  // namespace socrec
