#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "socrec/evaluation.hpp"

using namespace socrec;

TEST_CASE("average precision examples") {
  CHECK(average_precision({1, {10, 20, 30}, {10, 30}}) == doctest::Approx(5.0 / 6.0));
  CHECK(average_precision({1, {10, 20, 30}, {20}}) == 0.5);
  CHECK(average_precision({1, {10, 20, 30}, {40}}) == 0.0);
  CHECK(average_precision({1, {10, 20, 30, 40}, {40}}) == 0.0);
  CHECK(average_precision({1, {10, 20, 30, 40, 50}, {10, 20, 30, 40}}) == 1.0);
  CHECK(average_precision({1, {10}, {10, 20}}) == 0.5);
  CHECK(average_precision({1, {}, {10}}) == 0.0);
}

TEST_CASE("MAP skips users without relevant items") {
  const std::vector<UserRanking> r = {{1, {10, 20}, {10}}, {2, {10, 20}, {}}, {3, {10, 20}, {20}}};
  const auto m = map_at_n(r);
  CHECK(m.users == 2);
  CHECK(m.map == doctest::Approx(0.75));
  CHECK(m.per_user.size() == 2);
  CHECK_THROWS_AS(map_at_n(std::vector<UserRanking>{{1, {10}, {}}}), Error);
}

TEST_CASE("ranking orders by score, best duplicate wins, ties by item id") {
  const std::vector<ScoredItem> s = {{1, 30, 0.5}, {1, 10, 0.5}, {1, 20, 0.9}, {1, 30, 0.95}, {2, 5, 0.1}};
  const auto ranked = rank_items(s);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].second == std::vector<ItemId>{30, 20, 10});
  CHECK(ranked[1].second == std::vector<ItemId>{5});
}

TEST_CASE("rankings join with truth positives") {
  const std::vector<ScoredItem> s = {{1, 10, 0.2}, {1, 20, 0.1}};
  const std::vector<RatingRecord> truth = {{1, 20, 1, 0}, {1, 10, 0, 0}, {2, 30, 1, 0}};
  const auto r = make_rankings(s, truth);
  REQUIRE(r.size() == 2);
  CHECK(r[0].relevant == std::vector<ItemId>{20});
  CHECK(r[1].ranked.empty());
  CHECK(map_at_n(r).map == doctest::Approx(0.25));
  CHECK_THROWS_AS(make_rankings(s, std::vector<RatingRecord>{{9, 1, 1, 0}}), Error);
}

TEST_CASE("scores file round trip") {
  const std::vector<ScoredItem> s = {{1, 10, 0.125}, {2, 20, -3.5e-7}, {2, 21, 1.0 / 3.0}};
  const auto dir = test::scratch_dir("scores");
  write_scores(s, dir / "s.tsv", "config_hash=x");
  CHECK(read_scores(dir / "s.tsv") == s);
  CHECK(to_scored(std::vector<RatingRecord>{{4, 5, 1, 0}}, std::vector<double>{0.5}) ==
        std::vector<ScoredItem>{{4, 5, 0.5}});
}
