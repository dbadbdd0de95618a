#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "socrec/ensemble.hpp"
#include "socrec/pipeline.hpp"

using namespace socrec;

TEST_CASE("time split puts the boundary record in the first part") {
  const Timestamp b = 1000;
  const Timestamp cut = b + 23 * kSecondsPerDay;
  const std::vector<RatingRecord> recs = {{1, 1, 0, cut + 1}, {1, 2, 0, cut}, {2, 3, 1, b}};
  const auto s = split_by_time(recs, b);
  CHECK(s.boundary == cut);
  CHECK(s.first == std::vector<RatingRecord>{{1, 2, 0, cut}, {2, 3, 1, b}});
  CHECK(s.second == std::vector<RatingRecord>{{1, 1, 0, cut + 1}});
}

TEST_CASE("logistic regression recovers planted weights") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  FeatureMatrix fm;
  fm.cols = 2;
  const double w0 = -4.0, w1 = 1.0, w2 = -0.05;
  for (int k = 0; k < 40000; ++k) {
    const double x1 = 3.0 + 2.0 * g(rng);
    const double x2 = 10.0 * g(rng);
    fm.values.push_back(x1);
    fm.values.push_back(x2);
    const double p = sigmoid(w0 + w1 * x1 + w2 * x2);
    fm.labels.push_back(std::bernoulli_distribution(p)(rng) ? 1 : 0);
  }
  const EnsembleModel m = fit_logistic(fm);
  REQUIRE(m.weights.size() == 3);
  CHECK(m.weights[0] == doctest::Approx(w0).epsilon(0.1));
  CHECK(m.weights[1] == doctest::Approx(w1).epsilon(0.1));
  CHECK(m.weights[2] == doctest::Approx(w2).epsilon(0.15));
  CHECK(m.gradient_norm <= 1e-6);
  const double row[2] = {3.0, 0.0};
  CHECK(blend(m, row) == doctest::Approx(sigmoid(m.weights[0] + 3.0 * m.weights[1])));
}

TEST_CASE("logistic gradient: parallel equals serial and matches differences") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const std::size_t rows = 5000, cols = 3;
  std::vector<double> x(rows * cols);
  std::vector<std::uint8_t> y(rows);
  for (auto& v : x) v = g(rng);
  for (auto& v : y) v = static_cast<std::uint8_t>(rng() % 2);
  const std::vector<double> w = {0.1, -0.3, 0.7, 0.2};
  std::vector<double> a(4), b(4);
  logistic_gradient(x, cols, y, w, a);
  logistic_gradient_serial(x, cols, y, w, b);
  CHECK(a == b);

  const auto loss = [&](const std::vector<double>& ww) {
    double s = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      double z = ww[0];
      for (std::size_t c = 0; c < cols; ++c) z += ww[c + 1] * x[r * cols + c];
      const double p = sigmoid(z);
      s -= y[r] ? std::log(p) : std::log(1 - p);
    }
    return s / rows;
  };
  for (std::size_t k = 0; k < 4; ++k) {
    auto up = w, down = w;
    up[k] += 1e-6;
    down[k] -= 1e-6;
    CHECK(a[k] == doctest::Approx((loss(up) - loss(down)) / 2e-6).epsilon(1e-5));
  }
}

TEST_CASE("feature assembly and leakage guard") {
  const auto data = generate_synthetic(test::small_world(41));
  const auto split = split_by_time(data.dataset.log, data.dataset.window_begin);
  MfmConfig mc;
  mc.latent_dim = 4;
  const MfmModel early = make_model(data.dataset, split.first, mc);
  const auto th = fit_bins(user_intervals(data.dataset.log), 8);
  auto late = split.second;
  sort_log(late);
  const auto ctx = duration_contexts(late, th);
  std::vector<std::uint8_t> labels;
  for (const auto& r : late) labels.push_back(r.result);
  const auto tables = estimate_tables(ctx, labels, 8);

  const auto fm = assemble_features(late, ctx, early, &tables, 3);
  CHECK(fm.cols == 2);
  CHECK(fm.rows() == late.size());
  CHECK(fm.labels == labels);
  CHECK(fm.values == assemble_features_serial(late, ctx, early, &tables, 3).values);
  for (std::size_t r = 0; r < late.size(); r += 37) {
    CHECK(fm.row(r)[0] == predict(early, late[r].user, late[r].item, late[r].timestamp));
    CHECK(fm.row(r)[1] == gamma(ctx[r], 3, tables));
  }
  CHECK(assemble_features(late, ctx, early, nullptr, 0).cols == 1);

  const MfmModel full = make_model(data.dataset, data.dataset.log, mc);
  CHECK_THROWS_AS(assemble_features(late, ctx, full, &tables, 3), Error);
  CHECK_NOTHROW(assemble_features(late, ctx, full, &tables, 3, false));
}
