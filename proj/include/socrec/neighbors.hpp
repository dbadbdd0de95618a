#pragma once

#include <cstdint>
#include <vector>

#include "socrec/csr.hpp"
#include "socrec/dataset.hpp"

namespace socrec {

struct SparseVector {
  std::vector<std::uint32_t> index;  // ascending
  std::vector<double> value;
  double norm = 0.0;

  bool empty() const { return index.empty(); }
  static SparseVector make(std::vector<std::uint32_t> index, std::vector<double> value);
};

/// One weighted keyword vector and one binary tag vector per item row.
struct ItemVectors {
  std::vector<SparseVector> keywords;
  std::vector<SparseVector> tags;

  std::size_t size() const { return keywords.size(); }
};

/// Keyword weights come from the item account's own keyword profile when it
/// lists the keyword, otherwise 1.
ItemVectors make_item_vectors(const Dataset& dataset, const std::vector<ItemId>& items);

/// 1 - cosine similarity. Empty vectors are at distance 1 from everything.
double cosine_distance(const SparseVector& a, const SparseVector& b);

/// rho * keyword distance + (1 - rho) * tag distance, in [0, 2].
double item_distance(const ItemVectors& vectors, std::size_t i, std::size_t j, double rho);

struct Neighbor {
  std::uint32_t item = 0;  // item row
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Row i lists the (at most) k nearest other items, nearest first; equal
/// distances are ordered by item row.
struct NeighborTable {
  std::size_t k = 0;
  Csr<Neighbor> lists;

  friend bool operator==(const NeighborTable&, const NeighborTable&) = default;
};

/// Exact all-pairs k-NN, parallel over items.
NeighborTable build_neighbors(const ItemVectors& vectors, std::size_t k, double rho);
NeighborTable build_neighbors_serial(const ItemVectors& vectors, std::size_t k, double rho);

}  // namespace socrec
