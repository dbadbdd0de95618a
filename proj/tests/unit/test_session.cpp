#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "socrec/session.hpp"

using namespace socrec;

namespace {

std::vector<RatingRecord> user_log(UserId u, const std::vector<Timestamp>& ts,
                                   const std::vector<int>& labels) {
  std::vector<RatingRecord> out;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    out.push_back({u, static_cast<ItemId>(k + 1), static_cast<std::uint8_t>(labels[k]), ts[k]});
  }
  return out;
}

}  // namespace

TEST_CASE("session threshold") {
  const FilterParams p;
  CHECK(session_threshold(std::vector<double>{}, p.tau0, p.session_cap) == p.tau0);
  CHECK(session_threshold(std::vector<double>{4000, 9000}, p.tau0, p.session_cap) == p.tau0);
  CHECK(session_threshold(std::vector<double>{10, 30}, p.tau0, p.session_cap) == 0.5 * (90 + 20));
  CHECK(session_threshold(std::vector<double>{10, 30, 3600}, p.tau0, p.session_cap) == 55.0);
}

TEST_CASE("sessions split on gaps above the threshold") {
  // Intervals 10, 10, 200: tau = (90 + 220 / 3) / 2 = 81.67.
  const auto log = user_log(1, {0, 10, 20, 220}, {0, 0, 1, 0});
  const auto sessions = split_sessions(log, {});
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].records.size() == 3);
  CHECK(sessions[0].first_positive == std::optional<std::size_t>(2));
  CHECK(sessions[1].records.size() == 1);
  CHECK_FALSE(sessions[1].first_positive.has_value());
}

TEST_CASE("worked example keeps the first positive and what precedes it") {
  Session s;
  s.user = 1;
  s.records = user_log(1, {0, 10, 20, 30}, {0, 1, 1, 0});
  s.first_positive = 1;
  s.last_positive = 2;
  CHECK(filter_session(s, {}) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("filter conditions") {
  FilterParams p;
  Session s;
  SUBCASE("no positive drops the session") {
    s.records = user_log(1, {0, 1, 2}, {0, 0, 0});
    CHECK(filter_session(s, p).empty());
  }
  SUBCASE("all-positive session exceeds epsilon") {
    s.records = user_log(1, {0}, {1});
    s.first_positive = s.last_positive = 0;
    CHECK(filter_session(s, p).empty());
  }
  SUBCASE("records more than pi_plus before the last positive are dropped") {
    s.records = user_log(1, {0, 1, 2, 3, 4, 5, 6}, {0, 0, 0, 0, 0, 1, 0});
    s.first_positive = s.last_positive = 5;
    CHECK(filter_session(s, p) == std::vector<std::size_t>{2, 3, 4, 5});
  }
  SUBCASE("a looser pi_minus keeps records after the first positive") {
    p.pi_minus = 1;
    s.records = user_log(1, {0, 1, 2, 3}, {1, 0, 0, 0});
    s.first_positive = s.last_positive = 0;
    CHECK(filter_session(s, p) == std::vector<std::size_t>{0, 1});
  }
}

TEST_CASE("filter parameters are validated") {
  FilterParams p;
  p.epsilon = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.tau0 = -1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.pi_plus = -1;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("parallel filter equals serial filter") {
  const auto data = generate_synthetic(test::small_world(11, 2000, 100));
  const auto a = filter_dataset(data.dataset.log, {});
  const auto b = filter_dataset_serial(data.dataset.log, {});
  CHECK(a.positives == b.positives);
  CHECK(a.negatives == b.negatives);
  CHECK(a.stats == b.stats);
  CHECK(a.stats.input_records == data.dataset.log.size());
  CHECK(a.stats.kept_positive == a.positives.size());
  CHECK(a.merged().size() == a.positives.size() + a.negatives.size());
  const auto merged = a.merged();
  CHECK(std::is_sorted(merged.begin(), merged.end(), [](const auto& x, const auto& y) {
    return std::tie(x.user, x.timestamp) < std::tie(y.user, y.timestamp);
  }));
}

TEST_CASE("each kept session contributes exactly one positive") {
  const auto data = generate_synthetic(test::small_world(12, 1000, 60));
  const auto f = filter_dataset(data.dataset.log, {});
  std::size_t total = 0;
  for (const auto& s : [&] {
         std::vector<Session> all;
         std::size_t b = 0;
         const auto& log = data.dataset.log;
         while (b < log.size()) {
           std::size_t e = b;
           while (e < log.size() && log[e].user == log[b].user) ++e;
           auto part = split_sessions(std::span(log).subspan(b, e - b), {});
           all.insert(all.end(), part.begin(), part.end());
           b = e;
         }
         return all;
       }()) {
    const auto kept = filter_session(s, {});
    const auto pos = std::count_if(kept.begin(), kept.end(),
                                   [&](std::size_t k) { return s.records[k].result == 1; });
    CHECK((kept.empty() || pos == 1));
    total += kept.size();
  }
  CHECK(total == f.positives.size() + f.negatives.size());
}

TEST_CASE("supplement picks the strongest followed action target") {
  Dataset ds;
  for (UserId u = 1; u <= 5; ++u) ds.items[u] = {};
  ds.graph.follows[1] = {2, 3, 4};
  ds.graph.actions[1] = {{2, {1, 0, 0}}, {3, {0, 5, 1}}, {5, {9, 9, 9}}};
  ds.log = {{1, 2, 0, 100}, {1, 3, 0, 110}, {1, 4, 0, 120}};
  ds.window_begin = 0;
  ds.window_end = 1000;
  FilteredLog f = FilteredLog::from_records(ds.log);
  const auto added = supplement_positives(ds, f, {});
  // Scores: item 2 -> 2, item 3 -> 1 + 1 = 2.0; item 5 is not followed. Ties keep the lower id.
  REQUIRE(added.size() == 1);
  CHECK(added[0] == RatingRecord{1, 2, 1, 121});

  SupplementParams heavy_comments;
  heavy_comments.xi_comment = 3.0;
  const auto again = supplement_positives(ds, f, heavy_comments);
  REQUIRE(again.size() == 1);
  CHECK(again[0].item == 3);

  add_supplement(f, added);
  CHECK(f.stats.supplemented == 1);
  CHECK(f.positives.size() == 1);
  // Enough positives now: no further supplement.
  f.negatives.resize(1);
  CHECK(supplement_positives(ds, f, {}).empty());
}
