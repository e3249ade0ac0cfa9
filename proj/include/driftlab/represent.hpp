#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftlab/cohort.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/tensor.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// ---------------------------------------------------------------------------
// Concept matching
//
// Item descriptions are tokenised (lowercase, alphanumeric runs) and
// every synonym of every concept is located as a contiguous token span.
// A match whose span is strictly contained in another match's span is
// discarded: "blood pressure" inside "mean arterial blood pressure"
// never maps on its own. Matches with equal spans all survive.

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace represent_detail {

struct SpanMatch {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t concept_idx = 0;
};

inline std::vector<SpanMatch> all_span_matches(const std::vector<std::string>& tokens,
                                               const MiniOntology& onto) {
  std::vector<SpanMatch> matches;
  for (std::size_t ci = 0; ci < onto.concepts.size(); ++ci) {
    for (const auto& syn : onto.concepts[ci].synonyms) {
      if (syn.empty() || syn.size() > tokens.size()) continue;
      for (std::size_t start = 0; start + syn.size() <= tokens.size(); ++start) {
        bool hit = true;
        for (std::size_t k = 0; k < syn.size(); ++k) {
          if (tokens[start + k] != syn[k]) {
            hit = false;
            break;
          }
        }
        if (hit) matches.push_back({start, start + syn.size(), ci});
      }
    }
  }
  return matches;
}

}  // namespace represent_detail

// Concept ids matched by `description`, after discarding matches whose
// spans are strictly contained in another match's span. Sorted, unique.
inline std::vector<std::string> match_concepts(const std::string& description,
                                               const MiniOntology& onto) {
  using represent_detail::SpanMatch;
  const std::vector<std::string> tokens = tokenize(description);
  if (tokens.empty()) return {};
  std::vector<SpanMatch> matches = represent_detail::all_span_matches(tokens, onto);

  std::vector<std::string> out;
  for (const SpanMatch& a : matches) {
    bool contained = false;
    for (const SpanMatch& b : matches) {
      // strict containment: b covers a and is longer
      if (b.begin <= a.begin && a.end <= b.end &&
          (b.end - b.begin) > (a.end - a.begin)) {
        contained = true;
        break;
      }
    }
    if (!contained) out.push_back(onto.concepts[a.concept_idx].concept_id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Item column -> concept columns mapping for a whole vocabulary.
struct ConceptColumns {
  ColumnSpace space;                       // concept ids, sorted
  std::vector<std::vector<int>> item_cols;  // per item column, concept columns
};

inline ConceptColumns build_concept_mapping(const std::vector<ItemSpec>& items,
                                            const ItemColumns& item_columns,
                                            const MiniOntology& onto) {
  std::vector<std::vector<std::string>> per_item(items.size());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < items.size(); ++i) {
    per_item[i] = match_concepts(items[i].description, onto);
    for (const auto& c : per_item[i]) ids.push_back(c);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  ConceptColumns out;
  out.space = ColumnSpace{std::move(ids)};
  out.item_cols.assign(static_cast<std::size_t>(item_columns.space.width()), {});
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int item_col = item_columns.to_col.at(items[i].item_id);
    for (const auto& c : per_item[i]) {
      out.item_cols[static_cast<std::size_t>(item_col)].push_back(out.space.index_of(c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Representation builders
//
// All three sparse representations transform an item-space HourlyTensor
// per stay; the column spaces come from the builders below and are
// identical across stays.

// Raw representation: identity over the full item vocabulary. Columns
// for items from the other era simply stay unobserved, which is the
// entire failure mode under a vocabulary switch.
inline HourlyTensor build_raw(const HourlyTensor& item_tensor,
                              const ItemColumns& item_columns) {
  if (item_tensor.width != item_columns.space.width()) {
    throw_data("build_raw: tensor width " + std::to_string(item_tensor.width) +
               " does not match vocabulary width " +
               std::to_string(item_columns.space.width()));
  }
  return item_tensor;
}

// Clinical aggregation: cell (h, g) is the mean over the group's member
// items observed at hour h of value * to_canonical_factor. Unit
// conversion happens here, so mixed recording units within a group are
// comparable by construction.
struct AggregateColumns {
  ColumnSpace space;                 // "g<group_id>"
  std::vector<int> item_to_group;    // item col -> group col, -1 if unmapped
  std::vector<double> item_factor;   // item col -> to_canonical_factor
};

inline AggregateColumns build_aggregate_columns(const AggregationMap& agg,
                                                const ItemColumns& item_columns) {
  agg.validate();
  std::vector<std::string> ids;
  ids.reserve(agg.groups.size());
  for (const auto& g : agg.groups) ids.push_back("g" + std::to_string(g.group_id));
  AggregateColumns out;
  out.space = make_column_space(std::move(ids));
  out.item_to_group.assign(static_cast<std::size_t>(item_columns.space.width()), -1);
  out.item_factor.assign(static_cast<std::size_t>(item_columns.space.width()), 1.0);
  for (const auto& g : agg.groups) {
    const int gcol = out.space.index_of("g" + std::to_string(g.group_id));
    for (const auto& m : g.members) {
      auto it = item_columns.to_col.find(m.item_id);
      if (it == item_columns.to_col.end()) {
        throw_data("aggregation map references item " + std::to_string(m.item_id) +
                   " absent from the vocabulary");
      }
      out.item_to_group[static_cast<std::size_t>(it->second)] = gcol;
      out.item_factor[static_cast<std::size_t>(it->second)] = m.to_canonical_factor;
    }
  }
  return out;
}

inline HourlyTensor build_aggregate(const HourlyTensor& item_tensor,
                                    const AggregateColumns& cols) {
  HourlyTensor t;
  t.stay_id = item_tensor.stay_id;
  t.hours = item_tensor.hours;
  t.width = cols.space.width();
  // (hour, group col) -> (sum, count); item cells are already hourly
  // means, so this is a mean of member means.
  std::map<std::pair<int, int>, std::pair<double, int>> acc;
  for (const auto& cell : item_tensor.cells) {
    const int gcol = cols.item_to_group[static_cast<std::size_t>(cell.col)];
    if (gcol < 0) continue;
    auto& slot = acc[{cell.hour, gcol}];
    slot.first += cell.value * cols.item_factor[static_cast<std::size_t>(cell.col)];
    slot.second += 1;
  }
  t.cells.reserve(acc.size());
  for (const auto& [key, sum_count] : acc) {
    t.cells.push_back({static_cast<std::int16_t>(key.first),
                       static_cast<std::int32_t>(key.second),
                       sum_count.first / static_cast<double>(sum_count.second)});
  }
  return t;
}

// Concept spanning representation: input cells must already be per-item
// z-scores (fit a Normalizer over the item space on training data
// first); cell (h, c) is the mean of z-scores of the items mapped to
// concept c and observed at hour h. Fan-out duplicates an observation
// into every surviving concept.
inline HourlyTensor build_concept_span(const HourlyTensor& zscored_item_tensor,
                                       const ConceptColumns& cols) {
  HourlyTensor t;
  t.stay_id = zscored_item_tensor.stay_id;
  t.hours = zscored_item_tensor.hours;
  t.width = cols.space.width();
  std::map<std::pair<int, int>, std::pair<double, int>> acc;
  for (const auto& cell : zscored_item_tensor.cells) {
    for (int ccol : cols.item_cols[static_cast<std::size_t>(cell.col)]) {
      auto& slot = acc[{cell.hour, ccol}];
      slot.first += cell.value;
      slot.second += 1;
    }
  }
  t.cells.reserve(acc.size());
  for (const auto& [key, sum_count] : acc) {
    t.cells.push_back({static_cast<std::int16_t>(key.first),
                       static_cast<std::int32_t>(key.second),
                       sum_count.first / static_cast<double>(sum_count.second)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Normalization
//
// Per-column z-scoring over observed cells only. Statistics are fit on
// training stays and reused verbatim everywhere else; columns that were
// never observed in training fall back to mean 0 / std 1, and columns
// with (numerically) zero spread have their std floored to 1.

struct Normalizer {
  std::vector<std::string> columns;  // column ids in column-space order
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::uint8_t> floored;  // 1 where std was floored or column unseen

  HourlyTensor apply(const HourlyTensor& t) const {
    if (t.width != static_cast<int>(columns.size())) {
      throw_data("normalizer: tensor width " + std::to_string(t.width) +
                 " does not match fitted width " + std::to_string(columns.size()));
    }
    HourlyTensor out = t;
    for (auto& cell : out.cells) {
      const std::size_t c = static_cast<std::size_t>(cell.col);
      cell.value = (cell.value - mean[c]) / stddev[c];
    }
    return out;
  }
};

inline Normalizer fit_normalizer(std::span<const HourlyTensor* const> train,
                                 const ColumnSpace& space) {
  const std::size_t w = static_cast<std::size_t>(space.width());
  std::vector<double> sum(w, 0.0), sumsq(w, 0.0);
  std::vector<std::int64_t> count(w, 0);
  for (const HourlyTensor* t : train) {
    if (t->width != space.width()) {
      throw_data("fit_normalizer: tensor width mismatch");
    }
    for (const auto& cell : t->cells) {
      const std::size_t c = static_cast<std::size_t>(cell.col);
      sum[c] += cell.value;
      sumsq[c] += cell.value * cell.value;
      count[c] += 1;
    }
  }
  Normalizer n;
  n.columns = space.ids;
  n.mean.assign(w, 0.0);
  n.stddev.assign(w, 1.0);
  n.floored.assign(w, 0);
  for (std::size_t c = 0; c < w; ++c) {
    if (count[c] == 0) {
      n.floored[c] = 1;  // unseen in training: identity transform
      continue;
    }
    const double m = sum[c] / static_cast<double>(count[c]);
    double var = sumsq[c] / static_cast<double>(count[c]) - m * m;
    if (var < 0) var = 0;  // numeric guard
    const double sd = std::sqrt(var);
    n.mean[c] = m;
    if (sd < 1e-12) {
      n.stddev[c] = 1.0;
      n.floored[c] = 1;
    } else {
      n.stddev[c] = sd;
    }
  }
  return n;
}

inline Normalizer fit_normalizer(const std::vector<HourlyTensor>& train,
                                 const ColumnSpace& space) {
  std::vector<const HourlyTensor*> ptrs;
  ptrs.reserve(train.size());
  for (const auto& t : train) ptrs.push_back(&t);
  return fit_normalizer(std::span<const HourlyTensor* const>(ptrs), space);
}

// ---------------------------------------------------------------------------
// Simple imputation
//
// Three channels per feature: forward-filled value (0.0, the normalised
// mean, before the first observation), a binary observation mask, and
// the time since the last observation scaled by the grid length. The
// delta channel starts as if a virtual observation happened at hour -1:
// a feature observed nowhere ramps 1/H, 2/H, ..., H/H.
inline ImputedTensor simple_impute(const HourlyTensor& normalized) {
  ImputedTensor out;
  out.stay_id = normalized.stay_id;
  out.hours = normalized.hours;
  out.width = normalized.width;
  const std::size_t total =
      static_cast<std::size_t>(out.hours) * static_cast<std::size_t>(out.width);
  out.value.assign(total, 0.0);
  out.mask.assign(total, 0.0);
  out.delta.assign(total, 0.0);
  if (out.hours == 0 || out.width == 0) return out;

  const double h_scale = 1.0 / static_cast<double>(out.hours);
  std::vector<double> last_value(static_cast<std::size_t>(out.width), 0.0);
  std::vector<int> last_seen(static_cast<std::size_t>(out.width), -1);

  auto cell_it = normalized.cells.begin();
  for (int h = 0; h < out.hours; ++h) {
    // mark observations of this hour
    while (cell_it != normalized.cells.end() && cell_it->hour == h) {
      const std::size_t flat = out.idx(h, cell_it->col);
      out.mask[flat] = 1.0;
      last_value[static_cast<std::size_t>(cell_it->col)] = cell_it->value;
      last_seen[static_cast<std::size_t>(cell_it->col)] = h;
      ++cell_it;
    }
    for (int c = 0; c < out.width; ++c) {
      const std::size_t flat = out.idx(h, c);
      const std::size_t cc = static_cast<std::size_t>(c);
      out.value[flat] = last_seen[cc] >= 0 ? last_value[cc] : 0.0;
      out.delta[flat] = static_cast<double>(h - last_seen[cc]) * h_scale;
    }
  }
  return out;
}

}  // namespace driftlab
