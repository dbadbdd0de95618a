// Acceptance checks. Prints one PASS/FAIL line per criterion; exit code 1
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "socrec/config.hpp"
#include "socrec/synthetic.hpp"

namespace fs = std::filesystem;
using namespace socrec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

RunConfig ladder_base() { return load_config(fs::path(SOCREC_CONFIG_DIR) / "ladder.json"); }

// ---------------------------------------------------------------------------
// 1. Gradient oracle

SyntheticConfig tiny_world(std::uint64_t seed) {
  SyntheticConfig s;
  s.n_users = 20;
  s.n_items = 10;
  s.n_records = 400;
  s.latent_dim = 4;
  s.mean_follows = 3.0;
  s.positive_rate = 0.03;
  s.seed = seed;
  return s;
}

MfmModel random_model(const Dataset& data, int row, std::uint64_t seed) {
  RunConfig c;
  apply_ladder_row(c, row);
  c.model.latent_dim = 4;
  c.model.knn_k = 3;
  c.model.seed = seed;
  MfmModel m = make_model(data, data.log, c.model);
  std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(row));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& t : m.tables) {
    for (double& v : t.values) v = u(rng);
  }
  return m;
}

double pair_loss(const MfmModel& m, const TrainingPair& p) { return -std::log(pairwise_prob(m, p)); }

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  const double h = 1e-6;
  double worst = 0.0;
  std::size_t checked = 0;
  std::string where;
  for (int row = 1; row <= kLadderRows; ++row) {
    const SyntheticData data = generate_synthetic(tiny_world(100 + static_cast<std::uint64_t>(row)));
    MfmModel m = random_model(data.dataset, row, static_cast<std::uint64_t>(row));
    std::vector<TrainingPair> pairs = sample_pairs(FilteredLog::from_records(data.dataset.log), 3);
    if (pairs.size() > 6) pairs.resize(6);
    // Pairs with a cold user or a cold item exercise the fallbacks.
    const Timestamp mid = (data.dataset.window_begin + data.dataset.window_end) / 2;
    pairs.push_back({1, 2, 3, mid, mid + 4000});
    pairs.push_back({static_cast<UserId>(9999), 4, 5, mid, mid});
    pairs.push_back({2, 4, static_cast<ItemId>(9999), mid + 100, mid});

    for (const auto& pair : pairs) {
      SparseGradient grad(m);
      pair_gradient(m, pair, grad);
      std::set<std::pair<std::size_t, std::size_t>> touched;
      for (const auto& e : grad.entries()) {
        ParamTable& t = m.table(e.table);
        for (std::size_t c = 0; c < t.cols; ++c) {
          double& theta = t.row(e.row)[c];
          touched.insert({static_cast<std::size_t>(e.table), e.row * t.cols + c});
          const double saved = theta;
          theta = saved + h;
          const double up = pair_loss(m, pair);
          theta = saved - h;
          const double down = pair_loss(m, pair);
          theta = saved;
          const double numeric = (up - down) / (2 * h);
          const double analytic = grad.data(e)[c];
          const double err =
              std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
          ++checked;
          if (err > worst) {
            worst = err;
            where = "row " + std::to_string(row) + " table " + std::string(table_name(e.table));
          }
        }
      }
      // Parameters absent from the sparse gradient must not move the loss.
      std::mt19937_64 rng(checked);
      for (int probe = 0; probe < 20; ++probe) {
        const std::size_t k = rng() % kTableCount;
        ParamTable& t = m.tables[k];
        if (t.values.empty()) continue;
        const std::size_t idx = rng() % t.values.size();
        if (touched.contains({k, idx})) continue;
        const double saved = t.values[idx];
        t.values[idx] = saved + h;
        const double up = pair_loss(m, pair);
        t.values[idx] = saved - h;
        const double down = pair_loss(m, pair);
        t.values[idx] = saved;
        const double numeric = (up - down) / (2 * h);
        const double err = std::abs(numeric) / 1e-4;
        ++checked;
        if (err > worst) {
          worst = err;
          where = "row " + std::to_string(row) + " untouched " +
                  std::string(table_name(static_cast<Table>(k)));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << checked << " partials over " << kLadderRows << " flag sets, max rel err " << worst;
  if (!where.empty()) os << " (" << where << ")";
  os << ", " << secs << " s";
  return {worst < 1e-4 && secs < 30.0, os.str()};
}

// ---------------------------------------------------------------------------
// 2. Session filter oracle

std::vector<RatingRecord> filter_fixture() {
  std::vector<RatingRecord> log;
  const auto add = [&](UserId u, std::vector<Timestamp> ts, std::vector<int> labels) {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      log.push_back({u, static_cast<ItemId>(100 + log.size()), static_cast<std::uint8_t>(labels[k]),
                     ts[k]});
    }
  };
  // User 1 opens with the worked example: positives at 1 and 2 of a 4-record session.
  add(1, {0, 10, 20, 30, 1000, 1010, 1020, 5000}, {0, 1, 1, 0, 0, 0, 0, 1});
  add(2, {0, 20, 40, 60, 80, 100, 120, 140, 4200, 4220, 4240, 4260, 4280, 4300, 4320},
      {0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0});
  add(3, {0, 0, 50, 100, 150, 1000, 1070, 1140}, {0, 1, 0, 0, 1, 0, 1, 0});
  add(4, {0, 30, 60, 90, 120, 150, 180, 9000, 9030}, {1, 1, 1, 0, 1, 1, 1, 0, 0});
  add(5, {0, 40, 45, 200, 230, 260, 7200, 7300, 7305, 7400}, {0, 0, 1, 0, 1, 0, 0, 1, 0, 0});
  return log;
}

// Brute force, straight from the session equations.
std::vector<RatingRecord> brute_force_filter(std::vector<RatingRecord> log, const FilterParams& p) {
  std::map<UserId, std::vector<RatingRecord>> by_user;
  for (const auto& r : log) by_user[r.user].push_back(r);
  std::vector<RatingRecord> kept;
  for (auto& [user, recs] : by_user) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    double sum = 0;
    int count = 0;
    for (std::size_t s = 0; s + 1 < recs.size(); ++s) {
      const double dt = static_cast<double>(recs[s + 1].timestamp - recs[s].timestamp);
      if (dt > 0 && dt < p.session_cap) {
        sum += dt;
        ++count;
      }
    }
    const double tau = count == 0 ? p.tau0 : 0.5 * (p.tau0 + sum / count);
    std::vector<std::vector<RatingRecord>> sessions(1);
    for (std::size_t s = 0; s < recs.size(); ++s) {
      if (s > 0 && static_cast<double>(recs[s].timestamp - recs[s - 1].timestamp) > tau) {
        sessions.emplace_back();
      }
      sessions.back().push_back(recs[s]);
    }
    for (const auto& psi : sessions) {
      std::vector<int> pos;
      for (std::size_t k = 0; k < psi.size(); ++k) {
        if (psi[k].result) pos.push_back(static_cast<int>(k));
      }
      if (pos.empty()) continue;
      const int lo = *std::min_element(pos.begin(), pos.end());
      const int hi = *std::max_element(pos.begin(), pos.end());
      const double ratio = static_cast<double>(pos.size()) / static_cast<double>(psi.size());
      for (std::size_t k = 0; k < psi.size(); ++k) {
        const int sigma = static_cast<int>(k);
        if (sigma - lo <= p.pi_minus && hi - sigma <= p.pi_plus && ratio > 0 && ratio <= p.epsilon) {
          kept.push_back(psi[k]);
        }
      }
    }
  }
  return kept;
}

Outcome filter_oracle() {
  const auto log = filter_fixture();
  const FilterParams params;
  auto expected = brute_force_filter(log, params);
  auto actual = filter_dataset(log, params).merged();
  const auto key = [](const RatingRecord& a, const RatingRecord& b) {
    return std::tie(a.user, a.timestamp, a.item) < std::tie(b.user, b.timestamp, b.item);
  };
  std::sort(expected.begin(), expected.end(), key);
  std::sort(actual.begin(), actual.end(), key);

  // Worked example: user 1's first session keeps indices {0, 1}.
  std::vector<ItemId> first_session;
  for (const auto& r : actual) {
    if (r.user == 1 && r.timestamp <= 30) first_session.push_back(r.item);
  }
  const bool worked = first_session == std::vector<ItemId>{100, 101};
  std::ostringstream os;
  os << log.size() << " records, brute force keeps " << expected.size() << ", filter keeps "
     << actual.size() << ", worked example " << (worked ? "ok" : "wrong");
  return {log.size() == 50 && expected == actual && worked, os.str()};
}

// ---------------------------------------------------------------------------
// 3. MAP oracle

double brute_force_map(const std::vector<ScoredItem>& scored, const std::vector<RatingRecord>& truth,
                       std::size_t n) {
  std::map<UserId, std::map<ItemId, double>> best;
  for (const auto& s : scored) {
    auto [it, fresh] = best[s.user].try_emplace(s.item, s.score);
    if (!fresh) it->second = std::max(it->second, s.score);
  }
  std::map<UserId, std::set<ItemId>> rel;
  for (const auto& r : truth) {
    if (r.result) rel[r.user].insert(r.item);
  }
  double total = 0;
  int users = 0;
  for (const auto& [u, items] : best) {
    const auto& relevant = rel[u];
    if (relevant.empty()) continue;
    std::vector<std::pair<double, ItemId>> order;
    for (const auto& [i, s] : items) order.push_back({-s, i});
    std::sort(order.begin(), order.end());
    double ap = 0;
    int hits = 0;
    for (std::size_t k = 0; k < std::min(n, order.size()); ++k) {
      if (relevant.contains(order[k].second)) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(k + 1);
      }
    }
    total += ap / static_cast<double>(std::min(relevant.size(), n));
    ++users;
  }
  return total / users;
}

Outcome map_oracle() {
  std::mt19937_64 rng(2012);
  std::uniform_int_distribution<int> coarse(0, 9);
  std::bernoulli_distribution coin(0.25);
  std::vector<ScoredItem> scored;
  std::vector<RatingRecord> truth;
  for (UserId u = 1; u <= 200; ++u) {
    for (ItemId i = 1; i <= 10; ++i) {
      const double s = coarse(rng) / 10.0;  // coarse scores force ties
      scored.push_back({u, i, s});
      truth.push_back({u, i, static_cast<std::uint8_t>(coin(rng)), 0});
    }
  }
  const double expected = brute_force_map(scored, truth, 3);
  const double actual = map_at_n(make_rankings(scored, truth), 3).map;

  const double ap1 = average_precision({1, {1, 2, 3}, {1, 3}}, 3);
  const double ap2 = average_precision({1, {1, 2, 3}, {2}}, 3);
  const bool fixtures = std::abs(ap1 - 0.8333) < 5e-5 && ap2 == 0.5;
  std::ostringstream os;
  os.precision(17);
  os << "brute force " << expected << ", map_at_n " << actual << "; fixtures AP " << ap1 << ", "
     << ap2;
  return {expected == actual && fixtures, os.str()};
}

// ---------------------------------------------------------------------------
// 4. Factorization ladder

Outcome model_ladder() {
  const auto t0 = Clock::now();
  const std::vector<int> rows = {1, 2, 3, 4, kLadderRows};
  std::map<int, double> mean;
  const int seeds = 3;
  for (int seed = 1; seed <= seeds; ++seed) {
    RunConfig base = ladder_base();
    base.apply_seed(static_cast<std::uint64_t>(seed));
    const SyntheticData data = generate_synthetic(base.synthetic);
    for (int row : rows) {
      RunConfig c = base;
      apply_ladder_row(c, row);
      const FilteredLog f = preprocess(data.dataset, data.dataset.log, c.preprocess);
      const TrainedModel tm = fit_model(data.dataset, f, c.model, c.train);
      const double m = evaluate_scores(data.test, score_records(tm.model, data.test));
      std::printf("  seed %d row %2d MAP %.4f\n", seed, row, m);
      mean[row] += m / seeds;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << "mean MAP basic " << mean[1] << ", +pairwise " << mean[2] << ", +filter "
     << mean[3] << ", +sns " << mean[4] << ", full " << mean[kLadderRows] << "; " << secs << " s";
  const bool ordered = mean[1] < mean[2] && mean[2] < mean[3] && mean[3] < mean[4];
  const bool gain = mean[kLadderRows] >= mean[1] + 0.02;
  return {ordered && gain && secs < 600.0, os.str()};
}

// ---------------------------------------------------------------------------
// 5. Duration-context ladder

Outcome gamma_ladder() {
  const auto t0 = Clock::now();
  const int seeds = 3;
  double level1 = 0;
  std::map<int, double> mean;
  for (int seed = 1; seed <= seeds; ++seed) {
    RunConfig c = ladder_base();
    c.apply_seed(static_cast<std::uint64_t>(seed));
    apply_ladder_row(c, kLadderRows);
    const SyntheticData data = generate_synthetic(c.synthetic);
    const TwoStageResult r =
        run_two_stage(data.dataset, data.test, c.preprocess, c.model, c.train, c.ensemble, {1, 3, 5});
    const double l1 = evaluate_scores(data.test, r.level1_test_scores);
    level1 += l1 / seeds;
    std::printf("  seed %d level-1 %.4f", seed, l1);
    for (const auto& rr : r.ranges) {
      const double m = evaluate_scores(data.test, rr.test_scores);
      mean[rr.gamma_range] += m / seeds;
      std::printf(" G(%d) %.4f", rr.gamma_range, m);
    }
    std::printf("\n");
  }
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << "mean MAP level-1 " << level1 << ", G(1) " << mean[1] << ", G(3) " << mean[3]
     << ", G(5) " << mean[5] << "; " << seconds_since(t0) << " s";
  const bool ordered = mean[1] <= mean[3] && mean[3] <= mean[5];
  return {ordered && mean[5] >= level1 + 0.01, os.str()};
}

// ---------------------------------------------------------------------------
// 6. Determinism

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

bool run_pipeline(const fs::path& out) {
  const std::string base = std::string("\"") + SOCREC_CLI + "\" ";
  const std::string common = " --config \"" + std::string(SOCREC_CONFIG_DIR) +
                             "/smoke.json\" --out-dir \"" + out.string() + "\" 2>/dev/null";
  for (const char* stage : {"gen", "preprocess", "train", "ensemble"}) {
    if (std::system((base + stage + common).c_str()) != 0) return false;
  }
  const std::string eval = base + "eval --predictions \"" + (out / "ensemble" / "scores.tsv").string() +
                           "\"" + common + " >/dev/null";
  return std::system(eval.c_str()) == 0;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "socrec_determinism";
  fs::remove_all(root);
  const bool ok = run_pipeline(root / "a") && run_pipeline(root / "b");
  if (!ok) return {false, "pipeline run failed"};
  const auto a = snapshot(root / "a");
  const auto b = snapshot(root / "b");
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) differing.push_back(name);
  }
  fs::remove_all(root);
  std::ostringstream os;
  os << a.size() << " artifacts compared";
  for (const auto& d : differing) os << ", differs: " << d;
  return {differing.empty() && a.size() == b.size() && !a.empty(), os.str()};
}

// ---------------------------------------------------------------------------
// 7. Invariance suite

Outcome invariances() {
  const int cases = 100;
  int failures = 0;
  std::ostringstream os;
  std::mt19937_64 rng(77);

  int anti = 0;
  for (int k = 0; k < cases; ++k) {
    const int row = 1 + k % kLadderRows;
    const SyntheticData data = generate_synthetic(tiny_world(500 + static_cast<std::uint64_t>(k)));
    const MfmModel m = random_model(data.dataset, row, 1000 + static_cast<std::uint64_t>(k));
    const Timestamp t = data.dataset.window_begin +
                        static_cast<Timestamp>(rng() % static_cast<std::uint64_t>(
                                                           data.dataset.window_end - data.dataset.window_begin + 1));
    const UserId u = 1 + static_cast<UserId>(rng() % 20);
    const ItemId i = 1 + static_cast<ItemId>(rng() % 10);
    const ItemId j = 1 + static_cast<ItemId>(rng() % 10);
    const double sum = pairwise_prob(m, {u, i, j, t, t}) + pairwise_prob(m, {u, j, i, t, t});
    anti += std::abs(sum - 1.0) < 1e-12;
  }
  failures += anti != cases;
  os << "antisymmetry " << anti << "/" << cases;

  int ranks = 0;
  for (int k = 0; k < cases; ++k) {
    std::vector<ScoredItem> scored;
    std::vector<RatingRecord> truth;
    for (UserId u = 1; u <= 20; ++u) {
      for (ItemId i = 1; i <= 8; ++i) {
        scored.push_back({u, i, std::normal_distribution<double>()(rng)});
        truth.push_back({u, i, static_cast<std::uint8_t>(rng() % 3 == 0), 0});
      }
    }
    const double base = map_at_n(make_rankings(scored, truth)).map;
    bool same = true;
    const std::vector<std::function<double(double)>> transforms = {
        [](double x) { return 3 * x + 7; }, [](double x) { return std::exp(x); },
        [](double x) { return std::atan(x); }, [](double x) { return x * x * x; }};
    for (const auto& f : transforms) {
      auto t = scored;
      for (auto& s : t) s.score = f(s.score);
      same = same && map_at_n(make_rankings(t, truth)).map == base;
    }
    ranks += same;
  }
  failures += ranks != cases;
  os << ", rank invariance " << ranks << "/" << cases;

  int cold = 0;
  for (int k = 0; k < cases; ++k) {
    const SyntheticData data = generate_synthetic(tiny_world(900 + static_cast<std::uint64_t>(k)));
    const MfmModel m = random_model(data.dataset, 1 + k % kLadderRows, 2000 + static_cast<std::uint64_t>(k));
    const Timestamp t = data.dataset.window_begin + static_cast<Timestamp>(rng() % 1000000);
    cold += predict(m, 50000 + static_cast<UserId>(k), 60000 + static_cast<ItemId>(k), t) == m.mu;
  }
  failures += cold != cases;
  os << ", cold pair = mu " << cold << "/" << cases;

  int normalized = 0;
  for (int k = 0; k < cases; ++k) {
    SyntheticConfig s = tiny_world(1300 + static_cast<std::uint64_t>(k));
    s.n_users = 40 + static_cast<std::size_t>(k);
    s.n_items = 10 + static_cast<std::size_t>(k % 20);
    s.n_records = 20 * s.n_users;
    s.positive_rate = 0.03;
    const SyntheticData data = generate_synthetic(s);
    bool ok = true;
    for (const auto& [u, p] : data.dataset.profiles) {
      if (p.keywords.empty()) continue;
      double w = 0;
      for (const auto& kw : p.keywords) w += kw.weight * kw.weight;
      ok = ok && w >= 0.99 && w <= 1.01;
    }
    normalized += ok;
  }
  failures += normalized != cases;
  os << ", keyword sum of squares " << normalized << "/" << cases;

  int telescoping = 0;
  std::uniform_int_distribution<int> bin(-1, 15);
  for (int k = 0; k < cases; ++k) {
    std::vector<DurationContext> ctx(400);
    std::vector<std::uint8_t> labels(400);
    for (std::size_t r = 0; r < ctx.size(); ++r) {
      for (int& v : ctx[r]) v = bin(rng);
      labels[r] = static_cast<std::uint8_t>(rng() % 4 == 0);
    }
    const BehaviorTables tables = estimate_tables(ctx, labels, 16);
    const DurationContext& c = ctx[rng() % ctx.size()];
    const double g3 = gamma(c, 3, tables);
    const double g4 = gamma(c, 4, tables);
    const double g5 = gamma(c, 5, tables);
    const bool ok = std::abs((g5 - g4) - tables.p3(c[2], c[3], c[4])) < 1e-12 &&
                    std::abs((g4 - g3) - tables.p3(c[0], c[1], c[2])) < 1e-12;
    telescoping += ok;
  }
  failures += telescoping != cases;
  os << ", gamma telescoping " << telescoping << "/" << cases;
  return {failures == 0, os.str()};
}

// ---------------------------------------------------------------------------
// 8. Training throughput

Outcome performance() {
  SyntheticConfig s;
  s.n_users = 80000;
  s.n_records = 800000;
  s.seed = 5;
  const SyntheticData data = generate_synthetic(s);
  FilteredLog all = filter_dataset(data.dataset.log, {});
  // First 10^5 filtered records in user order.
  const std::size_t target = 100000;
  auto merged = all.merged();
  if (merged.size() < target) {
    return {false, "generated data yields only " + std::to_string(merged.size()) + " filtered records"};
  }
  merged.resize(target);
  const FilteredLog f = FilteredLog::from_records(merged);

  MfmConfig mc;
  mc.latent_dim = 40;
  mc.flags = FeatureFlags::all();
  TrainConfig tc;
  tc.epochs = 10;
  tc.report_every = 0;
  const auto t0 = Clock::now();
  const TrainedModel tm = fit_model(data.dataset, f, mc, tc);
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << f.negatives.size() + f.positives.size() << " filtered records, d=40, all features, "
     << tm.trace.size() << " epochs, " << tm.trace.back().pairs << " pairs/epoch in " << secs << " s";
  return {secs < 60.0 && tm.trace.size() == 10, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient oracle", gradient_oracle},
      {2, "session filter oracle", filter_oracle},
      {3, "MAP oracle", map_oracle},
      {4, "factorization ladder", model_ladder},
      {5, "duration-context ladder", gamma_ladder},
      {6, "pipeline determinism", determinism},
      {7, "invariance suite", invariances},
      {8, "training throughput", performance},
  };
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
