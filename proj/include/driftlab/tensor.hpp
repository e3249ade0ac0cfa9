#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// Per-stay hours x columns grid of optional values. Cells are stored
// sparsely (most are absent at clinical missingness rates) but the type
// behaves like a grid via at(). Cells are kept sorted by (hour, col)
// and unique; column identity lives in the ColumnSpace the tensor was
// built against, identical across stays by construction.
struct HourlyTensor {
  struct Cell {
    std::int16_t hour = 0;
    std::int32_t col = 0;
    double value = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
  };

  StayId stay_id = 0;
  int hours = 0;
  int width = 0;
  std::vector<Cell> cells;

  std::optional<double> at(int hour, int col) const {
    Cell probe{static_cast<std::int16_t>(hour), static_cast<std::int32_t>(col), 0};
    auto it = std::lower_bound(cells.begin(), cells.end(), probe,
                               [](const Cell& a, const Cell& b) {
                                 return a.hour != b.hour ? a.hour < b.hour : a.col < b.col;
                               });
    if (it != cells.end() && it->hour == hour && it->col == col) return it->value;
    return std::nullopt;
  }

  std::size_t observed_count() const { return cells.size(); }

  double missingness() const {
    const double total = static_cast<double>(hours) * static_cast<double>(width);
    if (total == 0) return 0;
    return 1.0 - static_cast<double>(cells.size()) / total;
  }

  friend bool operator==(const HourlyTensor&, const HourlyTensor&) = default;
};

// Column identities for one representation space. Ordering is
// lexicographic by identifier and fixed for the lifetime of a run.
struct ColumnSpace {
  std::vector<std::string> ids;  // sorted lexicographically

  int width() const { return static_cast<int>(ids.size()); }

  int index_of(const std::string& id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) {
      throw_data("unknown column identifier \"" + id + "\"");
    }
    return static_cast<int>(it - ids.begin());
  }
};

inline ColumnSpace make_column_space(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] == ids[i - 1]) throw_data("duplicate column identifier \"" + ids[i] + "\"");
  }
  return ColumnSpace{std::move(ids)};
}

// Dense output of simple imputation: per feature, three channels
// (value, mask, delta), each an hours x width grid in row-major order.
struct ImputedTensor {
  StayId stay_id = 0;
  int hours = 0;
  int width = 0;
  std::vector<double> value;  // forward-filled, 0.0 before first observation
  std::vector<double> mask;   // 1.0 where observed
  std::vector<double> delta;  // hours since last observation / hours

  double at_value(int h, int c) const { return value[idx(h, c)]; }
  double at_mask(int h, int c) const { return mask[idx(h, c)]; }
  double at_delta(int h, int c) const { return delta[idx(h, c)]; }

  std::size_t idx(int h, int c) const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c);
  }

  friend bool operator==(const ImputedTensor&, const ImputedTensor&) = default;
};

}  // namespace driftlab
