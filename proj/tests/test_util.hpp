#pragma once

// Shared helpers for building small in-memory datasets in tests.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlab/flat.hpp"

namespace driftlab::testutil {

// Dense dataset from explicit rows; feature ids default to f0, f1, ...
inline FlatDataset make_flat(const std::vector<std::vector<float>>& rows,
                             const std::vector<std::uint8_t>& labels) {
  FlatDataset d;
  d.dim = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  for (int j = 0; j < d.dim; ++j) d.feature_ids.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.add_row(std::span<const float>(rows[i].data(), rows[i].size()), labels[i],
              static_cast<StayId>(i));
  }
  return d;
}

}  // namespace driftlab::testutil
