#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace socrec {

/// Compressed sparse rows: row r holds values[offsets[r] .. offsets[r+1]).
template <class T>
struct Csr {
  std::vector<std::uint64_t> offsets{0};
  std::vector<T> values;

  std::size_t rows() const { return offsets.size() - 1; }

  std::span<const T> row(std::size_t r) const {
    return {values.data() + offsets[r], values.data() + offsets[r + 1]};
  }

  template <class Range>
  void push_row(const Range& range) {
    values.insert(values.end(), std::begin(range), std::end(range));
    offsets.push_back(values.size());
  }

  void push_empty_row() { offsets.push_back(values.size()); }

  friend bool operator==(const Csr&, const Csr&) = default;
};

}  // namespace socrec
