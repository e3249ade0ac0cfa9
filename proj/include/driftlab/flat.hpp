#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// Flattened per-stay examples: the hourly grid in hour-major order
// followed by the demographic one-hots. Features are stored as float32;
// model arithmetic accumulates in double.
struct FlatDataset {
  std::vector<std::string> feature_ids;
  int dim = 0;
  std::vector<float> x;  // n x dim, row-major
  std::vector<std::uint8_t> y;
  std::vector<StayId> stay_ids;

  std::size_t n() const { return y.size(); }

  std::span<const float> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }

  void reserve_rows(std::size_t n_rows) {
    x.reserve(n_rows * static_cast<std::size_t>(dim));
    y.reserve(n_rows);
    stay_ids.reserve(n_rows);
  }

  void add_row(std::span<const float> row, std::uint8_t label, StayId stay) {
    if (static_cast<int>(row.size()) != dim) {
      throw_data("flat dataset: row dimension " + std::to_string(row.size()) +
                 " does not match " + std::to_string(dim));
    }
    x.insert(x.end(), row.begin(), row.end());
    y.push_back(label);
    stay_ids.push_back(stay);
  }
};

// A train/evaluate view over a FlatDataset: row indices, no copying.
using RowIndices = std::vector<std::uint32_t>;

inline RowIndices all_rows(const FlatDataset& d) {
  RowIndices idx(d.n());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
  return idx;
}

inline std::pair<std::size_t, std::size_t> class_counts(const FlatDataset& d,
                                                        const RowIndices& rows) {
  std::size_t pos = 0;
  for (auto r : rows) pos += d.y[r];
  return {rows.size() - pos, pos};
}

}  // namespace driftlab
