#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "socrec/csr.hpp"
#include "socrec/dataset.hpp"
#include "socrec/neighbors.hpp"

namespace socrec {

struct WeightedIndex {
  std::uint32_t index = 0;
  double weight = 0.0;

  friend bool operator==(const WeightedIndex&, const WeightedIndex&) = default;
};

struct RatedItem {
  std::uint32_t item = 0;  // item row
  double mean_rating = 0.0;

  friend bool operator==(const RatedItem&, const RatedItem&) = default;
};

/// Dense row numbering of every entity the model knows, plus the side
/// information each prediction reads. Rows follow ascending ids.
struct FeatureIndex {
  std::vector<UserId> users;
  std::vector<ItemId> items;
  std::vector<KeywordId> keywords;
  std::vector<TagId> tags;

  // Per user row.
  std::vector<std::uint8_t> user_age;
  std::vector<std::uint8_t> user_gender;
  std::vector<std::uint8_t> user_tweet;
  Csr<std::uint32_t> follows;   // S(u) as user rows, sorted
  Csr<std::uint32_t> actions;   // A(u) as user rows, sorted
  Csr<WeightedIndex> user_keywords;  // keyword rows with W(u, m)
  Csr<std::uint32_t> user_tags;      // tag rows, sorted

  // Per item row.
  std::vector<std::uint32_t> item_user;   // the item's own user row
  Csr<std::uint32_t> item_keywords;       // keyword rows, sorted
  Csr<std::uint32_t> item_tags;           // tag rows, sorted

  // Training-rating history used by the neighborhood term.
  Csr<RatedItem> rated;           // per user row, sorted by item row
  std::vector<double> user_mean;  // mean observed rating per user row

  NeighborTable neighbors;

  std::optional<std::uint32_t> user_row(UserId u) const;
  std::optional<std::uint32_t> item_row(ItemId i) const;

  friend bool operator==(const FeatureIndex&, const FeatureIndex&) = default;
};

struct IndexOptions {
  bool self_follow = true;
  bool build_neighbors = false;
  std::size_t knn_k = 20;
  double rho = 0.6;
  int last_birth_year = 0;  // 0: the year the dataset window ends
};

/// Builds the index from the dataset's side information and the rating
/// history in `training` (which may differ from dataset.log).
FeatureIndex build_feature_index(const Dataset& dataset, std::span<const RatingRecord> training,
                                 const IndexOptions& options);

}  // namespace socrec
