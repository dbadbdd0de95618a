#pragma once

// Term enumeration shared by the forward pass and the gradient code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "socrec/model.hpp"

namespace socrec::detail {

/// Calls f(x) for every value present in both sorted ranges.
template <class F>
void for_each_shared(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b, F&& f) {
  std::size_t x = 0;
  std::size_t y = 0;
  while (x < a.size() && y < b.size()) {
    if (a[x] < b[y]) {
      ++x;
    } else if (b[y] < a[x]) {
      ++y;
    } else {
      f(a[x]);
      ++x;
      ++y;
    }
  }
}

/// Keyword rows of the user (sorted by row) that the item also lists.
template <class F>
void for_each_shared_keyword(std::span<const WeightedIndex> user,
                             std::span<const std::uint32_t> item, F&& f) {
  std::size_t x = 0;
  std::size_t y = 0;
  while (x < user.size() && y < item.size()) {
    if (user[x].index < item[y]) {
      ++x;
    } else if (item[y] < user[x].index) {
      ++y;
    } else {
      f(user[x].index);
      ++x;
      ++y;
    }
  }
}

/// n^alpha with the empty set contributing nothing.
inline double set_scale(std::size_t n, double alpha) {
  return n == 0 ? 0.0 : std::pow(static_cast<double>(n), alpha);
}

inline std::size_t age_gender_row(std::uint8_t age, std::uint8_t gender) {
  return static_cast<std::size_t>(age) * kGenders + gender;
}

/// Neighbor slots of item i that enter the neighborhood term for user u:
/// `rated` pairs a slot with the residual r_uj - mu_u, `followed` lists slots
/// whose item the user follows.
struct KnnSets {
  std::vector<std::pair<std::uint32_t, double>> rated;
  std::vector<std::uint32_t> followed;

  void clear() {
    rated.clear();
    followed.clear();
  }
};

inline void collect_knn(const MfmModel& model, std::uint32_t u, std::uint32_t i, KnnSets& out) {
  out.clear();
  const auto& ix = model.index;
  const auto history = ix.rated.row(u);
  const auto follows = ix.follows.row(u);
  const auto neighbors = ix.neighbors.lists.row(i);
  for (std::uint32_t slot = 0; slot < neighbors.size(); ++slot) {
    const std::uint32_t j = neighbors[slot].item;
    auto it = std::lower_bound(history.begin(), history.end(), j,
                               [](const RatedItem& r, std::uint32_t v) { return r.item < v; });
    if (it != history.end() && it->item == j) {
      out.rated.emplace_back(slot, it->mean_rating - ix.user_mean[u]);
    }
    if (std::binary_search(follows.begin(), follows.end(), ix.item_user[j])) {
      out.followed.push_back(slot);
    }
  }
}

}  // namespace socrec::detail
