#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/flat.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

// Random forest classifier with exact (sort-based) Gini splits.
//
// Reproducibility notes:
//   - each tree bootstraps its rows from rng_for(seed, t, "boot");
//   - the feature subset at a node is chosen by ranking features on
//     mix(path_hash, hash(feature_id)) and taking the mtry smallest keys,
//     so the pick is a pure function of the node's path and the feature
//     identity — independent of column order and of how ties elsewhere
//     resolved;
//   - split ties break on (gain, feature hash, threshold), making tree
//     structure deterministic.

struct RfConfig {
  int n_estimators = 100;
  int max_depth = 10;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double feature_fraction = 1.0;  // fraction of features tried per node
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;  // leaf: fraction of positive training rows
  int count = 0;     // training rows that reached this node
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct RfModel {
  std::vector<Tree> trees;
  int dim = 0;
  RfConfig config;
};

namespace rf_detail {

struct ColumnMajor {
  std::vector<float> data;  // dim x n, one column per feature
  std::size_t n = 0;
  const float* column(int j) const { return data.data() + static_cast<std::size_t>(j) * n; }
};

inline ColumnMajor to_column_major(const FlatDataset& d, const RowIndices& rows) {
  ColumnMajor cm;
  cm.n = rows.size();
  cm.data.resize(static_cast<std::size_t>(d.dim) * rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const float* row = d.x.data() + static_cast<std::size_t>(rows[i]) * d.dim;
    for (int j = 0; j < d.dim; ++j) {
      cm.data[static_cast<std::size_t>(j) * rows.size() + i] = row[j];
    }
  }
  return cm;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0;
  double gain = 0;
  std::uint64_t feat_hash = 0;
};

// Weighted Gini impurity decrease for splitting `pos` positives out of `n`
// into a left part (n_l, pos_l) and the remainder.
inline double gini_gain(double n, double pos, double n_l, double pos_l) {
  const double n_r = n - n_l;
  const double pos_r = pos - pos_l;
  auto gini = [](double cnt, double p) {
    if (cnt <= 0) return 0.0;
    const double f = p / cnt;
    return 2.0 * f * (1.0 - f);
  };
  return gini(n, pos) - (n_l / n) * gini(n_l, pos_l) - (n_r / n) * gini(n_r, pos_r);
}

struct Builder {
  const ColumnMajor& cm;
  const std::vector<std::uint8_t>& y;  // per bootstrap-local row
  const RfConfig& cfg;
  const std::vector<std::uint64_t>& feat_hashes;
  int mtry;
  std::vector<TreeNode> nodes;
  // scratch
  std::vector<std::uint32_t> order;
  std::vector<std::pair<std::uint64_t, int>> keys;

  int build(std::vector<std::uint32_t>& idx, int depth, std::uint64_t path_hash) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const double n = static_cast<double>(idx.size());
    double pos = 0;
    for (auto i : idx) pos += y[i];
    nodes[static_cast<std::size_t>(node_id)].count = static_cast<int>(idx.size());
    nodes[static_cast<std::size_t>(node_id)].value = pos / n;

    const bool can_split = depth < cfg.max_depth &&
                           static_cast<int>(idx.size()) >= cfg.min_samples_split && pos > 0 &&
                           pos < n;
    if (!can_split) return node_id;

    // Rank features by mix(path_hash, feature hash); try the mtry smallest.
    keys.clear();
    keys.reserve(feat_hashes.size());
    for (int j = 0; j < static_cast<int>(feat_hashes.size()); ++j) {
      keys.emplace_back(mix_seed(path_hash, feat_hashes[static_cast<std::size_t>(j)]), j);
    }
    const int m = std::min<int>(mtry, static_cast<int>(keys.size()));
    std::nth_element(keys.begin(), keys.begin() + m, keys.end());
    std::sort(keys.begin(), keys.begin() + m);

    SplitChoice best;
    for (int k = 0; k < m; ++k) {
      const int j = keys[static_cast<std::size_t>(k)].second;
      const float* col = cm.column(j);
      order.assign(idx.begin(), idx.end());
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return col[a] < col[b] || (col[a] == col[b] && a < b);
      });
      if (col[order.front()] == col[order.back()]) continue;  // constant in node
      double pos_l = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        pos_l += y[order[i]];
        if (col[order[i]] == col[order[i + 1]]) continue;  // not a boundary
        const double n_l = static_cast<double>(i + 1);
        if (n_l < cfg.min_samples_leaf ||
            n - n_l < static_cast<double>(cfg.min_samples_leaf)) {
          continue;
        }
        const double gain = gini_gain(n, pos, n_l, pos_l);
        const double theta =
            0.5 * (static_cast<double>(col[order[i]]) + static_cast<double>(col[order[i + 1]]));
        const std::uint64_t fh = feat_hashes[static_cast<std::size_t>(j)];
        const bool better =
            !best.found || gain > best.gain + 1e-15 ||
            (std::abs(gain - best.gain) <= 1e-15 &&
             (fh < best.feat_hash || (fh == best.feat_hash && theta < best.threshold)));
        if (better && gain > 1e-12) {
          best = {true, j, theta, gain, fh};
        }
      }
    }
    if (!best.found) return node_id;

    std::vector<std::uint32_t> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    const float* col = cm.column(best.feature);
    for (auto i : idx) {
      (col[i] <= best.threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    const std::uint64_t theta_bits = std::bit_cast<std::uint64_t>(best.threshold);
    const std::uint64_t base = mix_seed(path_hash, best.feat_hash);
    const int left = build(left_idx, depth + 1, mix_seed(mix_seed(base, 0), theta_bits));
    const int right = build(right_idx, depth + 1, mix_seed(mix_seed(base, 1), theta_bits));
    nodes[static_cast<std::size_t>(node_id)].feature = best.feature;
    nodes[static_cast<std::size_t>(node_id)].threshold = best.threshold;
    nodes[static_cast<std::size_t>(node_id)].left = left;
    nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

inline double tree_score(const Tree& t, const float* row) {
  int node = 0;
  while (true) {
    const TreeNode& nd = t.nodes[static_cast<std::size_t>(node)];
    if (nd.feature < 0) return nd.value;
    node = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
}

}  // namespace rf_detail

inline RfModel train_rf(const FlatDataset& d, const RowIndices& rows, const RfConfig& cfg) {
  using namespace rf_detail;
  if (rows.empty()) throw_eval("random forest: empty training set");
  auto [neg, pos] = class_counts(d, rows);
  if (neg == 0 || pos == 0) throw_eval("random forest: training labels are single-class");
  if (cfg.n_estimators < 1) throw_config("random forest: n_estimators must be >= 1");
  if (cfg.max_depth < 1) throw_config("random forest: max_depth must be >= 1");
  if (cfg.min_samples_split < 2) throw_config("random forest: min_samples_split must be >= 2");
  if (cfg.min_samples_leaf < 1) throw_config("random forest: min_samples_leaf must be >= 1");
  if (!(cfg.feature_fraction > 0) || cfg.feature_fraction > 1.0) {
    throw_config("random forest: feature_fraction must be in (0, 1]");
  }

  ColumnMajor cm = to_column_major(d, rows);

  std::vector<std::uint64_t> feat_hashes(static_cast<std::size_t>(d.dim));
  for (int j = 0; j < d.dim; ++j) {
    feat_hashes[static_cast<std::size_t>(j)] = fnv1a64(d.feature_ids[static_cast<std::size_t>(j)]);
  }
  const int mtry = std::max(
      1, static_cast<int>(std::ceil(cfg.feature_fraction * static_cast<double>(d.dim))));

  RfModel model;
  model.dim = d.dim;
  model.config = cfg;
  model.trees.resize(static_cast<std::size_t>(cfg.n_estimators));

  std::vector<std::uint8_t> yb(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) yb[i] = d.y[rows[i]];

  for (int t = 0; t < cfg.n_estimators; ++t) {
    Rng boot = rng_for(cfg.seed, t, "boot");
    std::vector<std::uint32_t> idx(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      idx[i] = static_cast<std::uint32_t>(boot.bounded(rows.size()));
    }
    Builder b{cm, yb, cfg, feat_hashes, mtry, {}, {}, {}};
    b.nodes.reserve(64);
    b.build(idx, 0, mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    model.trees[static_cast<std::size_t>(t)].nodes = std::move(b.nodes);
  }
  return model;
}

inline RfModel train_rf(const FlatDataset& d, const RfConfig& cfg) {
  return train_rf(d, all_rows(d), cfg);
}

inline std::vector<double> predict_rf(const RfModel& m, const FlatDataset& d,
                                      const RowIndices& rows) {
  if (m.dim != d.dim) {
    throw_data("random forest: model expects " + std::to_string(m.dim) +
               " features, dataset has " + std::to_string(d.dim));
  }
  std::vector<double> out(rows.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const float* row = d.x.data() + static_cast<std::size_t>(rows[i]) * d.dim;
    double acc = 0;
    for (const Tree& t : m.trees) acc += rf_detail::tree_score(t, row);
    out[i] = acc / static_cast<double>(m.trees.size());
  }
  return out;
}

inline std::vector<double> predict_rf(const RfModel& m, const FlatDataset& d) {
  return predict_rf(m, d, all_rows(d));
}

}  // namespace driftlab
