#include "socrec/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace socrec {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.item < b.item;
}

std::vector<Neighbor> nearest_for(const ItemVectors& vectors, std::size_t i, std::size_t k,
                                  double rho) {
  const std::size_t n = vectors.size();
  std::vector<Neighbor> all;
  all.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    all.push_back({static_cast<std::uint32_t>(j), item_distance(vectors, i, j, rho)});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<long>(keep), all.end(), closer);
  all.resize(keep);
  return all;
}

}  // namespace

SparseVector SparseVector::make(std::vector<std::uint32_t> index, std::vector<double> value) {
  SparseVector v;
  v.index = std::move(index);
  v.value = std::move(value);
  double sq = 0.0;
  for (double x : v.value) sq += x * x;
  v.norm = std::sqrt(sq);
  return v;
}

ItemVectors make_item_vectors(const Dataset& dataset, const std::vector<ItemId>& items) {
  ItemVectors out;
  out.keywords.reserve(items.size());
  out.tags.reserve(items.size());
  for (ItemId item : items) {
    const auto& keywords = dataset.item_keywords(item);
    const auto& own = dataset.profile(item).keywords;
    std::vector<std::uint32_t> idx(keywords.begin(), keywords.end());
    std::vector<double> val;
    val.reserve(idx.size());
    for (KeywordId m : keywords) {
      auto it = std::lower_bound(own.begin(), own.end(), m,
                                 [](const KeywordWeight& kw, KeywordId id) { return kw.keyword < id; });
      val.push_back(it != own.end() && it->keyword == m ? it->weight : 1.0);
    }
    out.keywords.push_back(SparseVector::make(std::move(idx), std::move(val)));

    const auto& tags = dataset.item_tags(item);
    out.tags.push_back(SparseVector::make(std::vector<std::uint32_t>(tags.begin(), tags.end()),
                                          std::vector<double>(tags.size(), 1.0)));
  }
  return out;
}

double cosine_distance(const SparseVector& a, const SparseVector& b) {
  if (a.empty() || b.empty() || a.norm == 0.0 || b.norm == 0.0) return 1.0;
  double dot = 0.0;
  std::size_t x = 0;
  std::size_t y = 0;
  while (x < a.index.size() && y < b.index.size()) {
    if (a.index[x] < b.index[y]) {
      ++x;
    } else if (b.index[y] < a.index[x]) {
      ++y;
    } else {
      dot += a.value[x++] * b.value[y++];
    }
  }
  return std::clamp(1.0 - dot / (a.norm * b.norm), 0.0, 2.0);
}

double item_distance(const ItemVectors& v, std::size_t i, std::size_t j, double rho) {
  return rho * cosine_distance(v.keywords[i], v.keywords[j]) +
         (1.0 - rho) * cosine_distance(v.tags[i], v.tags[j]);
}

NeighborTable build_neighbors(const ItemVectors& vectors, std::size_t k, double rho) {
  if (k < 1) throw Error("neighbors: k must be >= 1");
  const std::size_t n = vectors.size();
  std::vector<std::vector<Neighbor>> rows(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < count; ++i) {
    rows[static_cast<std::size_t>(i)] = nearest_for(vectors, static_cast<std::size_t>(i), k, rho);
  }
  NeighborTable table;
  table.k = k;
  for (const auto& row : rows) table.lists.push_row(row);
  return table;
}

NeighborTable build_neighbors_serial(const ItemVectors& vectors, std::size_t k, double rho) {
  if (k < 1) throw Error("neighbors: k must be >= 1");
  NeighborTable table;
  table.k = k;
  for (std::size_t i = 0; i < vectors.size(); ++i) table.lists.push_row(nearest_for(vectors, i, k, rho));
  return table;
}

}  // namespace socrec
