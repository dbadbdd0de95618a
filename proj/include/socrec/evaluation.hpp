#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "socrec/types.hpp"

namespace socrec {

struct ScoredItem {
  UserId user = 0;
  ItemId item = 0;
  double score = 0.0;

  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

struct UserRanking {
  UserId user = 0;
  std::vector<ItemId> ranked;    // best first, no duplicates
  std::vector<ItemId> relevant;  // sorted
};

double average_precision(const UserRanking& ranking, std::size_t n = 3);

struct MapResult {
  double map = 0.0;
  std::size_t users = 0;                 // users with at least one relevant item
  std::vector<std::pair<UserId, double>> per_user;
};

/// Mean AP over users with a non-empty relevant set. Throws when there are none.
MapResult map_at_n(std::span<const UserRanking> rankings, std::size_t n = 3);

/// Orders each user's items by descending score (a user/item pair seen more
/// than once keeps its best score), ties by ascending item id.
std::vector<std::pair<UserId, std::vector<ItemId>>> rank_items(std::span<const ScoredItem> scored);

/// Joins ranked predictions with the positives of `truth`. Users that appear
/// only in the truth get an empty ranking. Throws when no user is shared.
std::vector<UserRanking> make_rankings(std::span<const ScoredItem> scored,
                                       std::span<const RatingRecord> truth);

/// Scores aligned with `records`.
std::vector<ScoredItem> to_scored(std::span<const RatingRecord> records,
                                  std::span<const double> scores);

void write_scores(std::span<const ScoredItem> scored, const std::filesystem::path& file,
                  const std::string& stamp = {});
std::vector<ScoredItem> read_scores(const std::filesystem::path& file);

/// `userId item1 item2 ...` with the top n items.
void write_rankings(std::span<const ScoredItem> scored, std::size_t n,
                    const std::filesystem::path& file, const std::string& stamp = {});

void write_report(const MapResult& result, const std::filesystem::path& file,
                  const std::string& stamp = {});

}  // namespace socrec
