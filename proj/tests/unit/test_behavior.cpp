#include <random>

#include "doctest.h"
#include "socrec/behavior.hpp"

using namespace socrec;

TEST_CASE("equal-frequency bins") {
  std::vector<double> xs;
  for (int k = 1; k <= 160; ++k) xs.push_back(k);
  const auto th = fit_bins(xs, 16);
  REQUIRE(th.bins() == 16);
  CHECK(th.theta.front() == 0.0);
  CHECK(std::isinf(th.theta.back()));
  CHECK(th.theta[1] == 11.0);
  CHECK(std::is_sorted(th.theta.begin(), th.theta.end()));
  CHECK(std::adjacent_find(th.theta.begin(), th.theta.end()) == th.theta.end());
  CHECK(discretize(0, 5, 1.0, th) == 0);
  CHECK(discretize(0, 5, 11.0, th) == 1);
  CHECK(discretize(0, 5, 1e9, th) == 15);
  CHECK(discretize(-1, 5, 1.0, th) == -1);
  CHECK(discretize(5, 5, 1.0, th) == -1);
}

TEST_CASE("heavy ties still give strictly increasing thresholds") {
  std::vector<double> xs(1000, 5.0);
  for (int k = 1; k <= 20; ++k) xs.push_back(100.0 + k);
  const auto th = fit_bins(xs, 16);
  CHECK(std::adjacent_find(th.theta.begin(), th.theta.end(),
                           [](double a, double b) { return !(a < b); }) == th.theta.end());
  CHECK_THROWS_AS(fit_bins(std::vector<double>{1, 2, 3}, 16), Error);
}

TEST_CASE("duration contexts look two records each way") {
  // Gaps of user 1: 10, 100, 1000; the last record has no duration.
  const std::vector<RatingRecord> log = {
      {1, 1, 0, 0}, {1, 2, 0, 10}, {1, 3, 1, 110}, {1, 4, 0, 1110}, {2, 1, 0, 50}};
  BinThresholds th;
  th.theta = {0.0, 50.0, 500.0, std::numeric_limits<double>::infinity()};
  const auto ctx = duration_contexts(log, th);
  REQUIRE(ctx.size() == 5);
  CHECK(ctx[0] == DurationContext{-1, -1, 0, 1, 2});
  CHECK(ctx[1] == DurationContext{-1, 0, 1, 2, -1});
  CHECK(ctx[2] == DurationContext{0, 1, 2, -1, -1});
  CHECK(ctx[3] == DurationContext{1, 2, -1, -1, -1});
  CHECK(ctx[4] == DurationContext{-1, -1, -1, -1, -1});
  CHECK(user_intervals(log) == std::vector<double>{10, 100, 1000});
}

TEST_CASE("smoothed tables and marginal fallback") {
  const std::vector<DurationContext> ctx = {
      {-1, -1, 0, 1, 1}, {-1, 0, 1, 1, -1}, {0, 1, 1, -1, -1}, {-1, -1, 0, -1, -1}};
  const std::vector<std::uint8_t> labels = {1, 0, 0, 1};
  const auto t = estimate_tables(ctx, labels, 2);
  CHECK(t.marginal == 0.5);
  CHECK(t.p1(0) == doctest::Approx((2 + 1.0) / (2 + 2.0)));
  CHECK(t.p1(1) == doctest::Approx((0 + 1.0) / (2 + 2.0)));
  CHECK(t.p2(-1, 0) == doctest::Approx((2 + 1.0) / (2 + 2.0)));
  CHECK(t.p3(0, 1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(t.p3(1, 1, 1) == t.marginal);
  CHECK(t.p2(1, 0) == t.marginal);
}

TEST_CASE("gamma sums trigram windows") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> bin(-1, 3);
  std::vector<DurationContext> ctx(300);
  std::vector<std::uint8_t> labels(300);
  for (std::size_t k = 0; k < ctx.size(); ++k) {
    for (int& v : ctx[k]) v = bin(rng);
    labels[k] = static_cast<std::uint8_t>(rng() % 3 == 0);
  }
  const auto t = estimate_tables(ctx, labels, 4);
  for (const auto& c : ctx) {
    CHECK(gamma(c, 1, t) == t.p1(c[2]));
    CHECK(gamma(c, 2, t) == t.p2(c[1], c[2]));
    CHECK(gamma(c, 3, t) == t.p3(c[1], c[2], c[3]));
    CHECK(gamma(c, 4, t) == doctest::Approx(t.p3(c[0], c[1], c[2]) + gamma(c, 3, t)));
    CHECK(gamma(c, 5, t) == doctest::Approx(gamma(c, 4, t) + t.p3(c[2], c[3], c[4])));
  }
  CHECK_THROWS_AS(gamma(ctx[0], 6, t), Error);
  CHECK_THROWS_AS(gamma(ctx[0], 0, t), Error);
}
