#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/flat.hpp"
#include "driftlab/forest.hpp"
#include "driftlab/logistic.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

// Random hyperparameter search with stratified k-fold cross-validation.
// Configuration draws are a pure function of (spec seed, draw index), the
// fold assignment is a pure function of (spec seed, row labels), and ties
// on mean validation AUROC break toward the lowest draw index — so a
// search is reproducible from its spec alone.

enum class ModelFamily { Lr, Rf };

inline const char* family_name(ModelFamily f) {
  return f == ModelFamily::Lr ? "lr" : "rf";
}

inline ModelFamily parse_family(const std::string& s) {
  if (s == "lr") return ModelFamily::Lr;
  if (s == "rf") return ModelFamily::Rf;
  throw_config("unknown model family '" + s + "' (expected 'lr' or 'rf')");
}

struct LrSearchSpace {
  double c_min = 1e-4;
  double c_max = 1e2;  // C drawn log-uniform from [c_min, c_max]
  bool allow_l1 = true;
  bool allow_l2 = true;
  int max_iter_min = 500;
  int max_iter_max = 1000;
  double tol = 1e-7;
};

struct RfSearchSpace {
  int trees_min = 50;
  int trees_max = 300;
  int depth_min = 3;
  int depth_max = 20;
  int leaf_min = 1;
  int leaf_max = 8;
  int split_min = 2;
  int split_max = 16;
  double feature_fraction_min = 0.05;  // log-uniform
  double feature_fraction_max = 1.0;
};

struct SearchSpec {
  ModelFamily family = ModelFamily::Lr;
  int n_draws = 20;
  int cv_folds = 5;
  std::uint64_t seed = 0;
  LrSearchSpace lr;
  RfSearchSpace rf;

  void validate() const {
    if (n_draws < 1) throw_config("search: n_draws must be >= 1");
    if (cv_folds < 2) throw_config("search: cv_folds must be >= 2");
    if (!(lr.c_min > 0) || lr.c_max < lr.c_min) throw_config("search: bad lr C range");
    if (!lr.allow_l1 && !lr.allow_l2) throw_config("search: no lr penalty enabled");
    if (lr.max_iter_min < 1 || lr.max_iter_max < lr.max_iter_min) {
      throw_config("search: bad lr max_iter range");
    }
    if (rf.trees_min < 1 || rf.trees_max < rf.trees_min) throw_config("search: bad rf tree range");
    if (rf.depth_min < 1 || rf.depth_max < rf.depth_min) throw_config("search: bad rf depth range");
    if (rf.leaf_min < 1 || rf.leaf_max < rf.leaf_min) throw_config("search: bad rf leaf range");
    if (rf.split_min < 2 || rf.split_max < rf.split_min) {
      throw_config("search: bad rf min_samples_split range");
    }
    if (!(rf.feature_fraction_min > 0) || rf.feature_fraction_max < rf.feature_fraction_min ||
        rf.feature_fraction_max > 1.0) {
      throw_config("search: bad rf feature_fraction range");
    }
  }
};

// One concrete hyperparameter setting; only the member matching `family`
// is meaningful.
struct ModelConfig {
  ModelFamily family = ModelFamily::Lr;
  LrConfig lr;
  RfConfig rf;
};

struct TrainedModel {
  ModelFamily family = ModelFamily::Lr;
  LrModel lr;
  RfModel rf;
};

inline ModelConfig draw_config(const SearchSpec& spec, int draw_idx) {
  if (draw_idx < 0 || draw_idx >= spec.n_draws) {
    throw_config("draw_config: draw index " + std::to_string(draw_idx) + " outside [0, " +
                 std::to_string(spec.n_draws) + ")");
  }
  Rng rng = rng_for(spec.seed, "draw", draw_idx);
  ModelConfig cfg;
  cfg.family = spec.family;
  if (spec.family == ModelFamily::Lr) {
    cfg.lr.c = std::exp(rng.uniform(std::log(spec.lr.c_min), std::log(spec.lr.c_max)));
    if (spec.lr.allow_l1 && spec.lr.allow_l2) {
      cfg.lr.penalty = rng.bernoulli(0.5) ? Penalty::L1 : Penalty::L2;
    } else {
      cfg.lr.penalty = spec.lr.allow_l1 ? Penalty::L1 : Penalty::L2;
    }
    cfg.lr.max_iter = rng.uniform_int(spec.lr.max_iter_min, spec.lr.max_iter_max);
    cfg.lr.tol = spec.lr.tol;
  } else {
    // Draw order is part of the determinism contract: trees, depth, leaf,
    // split, feature fraction.
    cfg.rf.n_estimators = rng.uniform_int(spec.rf.trees_min, spec.rf.trees_max);
    cfg.rf.max_depth = rng.uniform_int(spec.rf.depth_min, spec.rf.depth_max);
    cfg.rf.min_samples_leaf = rng.uniform_int(spec.rf.leaf_min, spec.rf.leaf_max);
    cfg.rf.min_samples_split = rng.uniform_int(spec.rf.split_min, spec.rf.split_max);
    cfg.rf.feature_fraction = std::exp(rng.uniform(std::log(spec.rf.feature_fraction_min),
                                                   std::log(spec.rf.feature_fraction_max)));
    cfg.rf.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(draw_idx));
  }
  return cfg;
}

inline TrainedModel fit_model(const FlatDataset& d, const RowIndices& rows,
                              const ModelConfig& cfg) {
  TrainedModel m;
  m.family = cfg.family;
  if (cfg.family == ModelFamily::Lr) {
    m.lr = train_lr(d, rows, cfg.lr);
  } else {
    m.rf = train_rf(d, rows, cfg.rf);
  }
  return m;
}

inline std::vector<double> predict_model(const TrainedModel& m, const FlatDataset& d,
                                         const RowIndices& rows) {
  return m.family == ModelFamily::Lr ? predict_lr(m.lr, d, rows) : predict_rf(m.rf, d, rows);
}

inline std::vector<double> predict_model(const TrainedModel& m, const FlatDataset& d) {
  return predict_model(m, d, all_rows(d));
}

namespace search_detail {

inline std::vector<RowIndices> deal_folds(RowIndices pos, RowIndices neg, int k,
                                          std::uint64_t seed) {
  if (k < 2) throw_config("stratified_folds: need k >= 2");
  if (static_cast<int>(pos.size()) < k || static_cast<int>(neg.size()) < k) {
    throw_eval("stratified_folds: need at least " + std::to_string(k) +
               " examples of each class, got " + std::to_string(pos.size()) + " positive and " +
               std::to_string(neg.size()) + " negative");
  }
  Rng rng = rng_for(seed, "folds");
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<RowIndices> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < pos.size(); ++i) folds[i % k].push_back(pos[i]);
  for (std::size_t i = 0; i < neg.size(); ++i) folds[i % k].push_back(neg[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace search_detail

// Stratified fold assignment: positives and negatives are each listed in
// row order, shuffled once, and dealt round-robin, so every fold holds
// both classes. Errors when either class has fewer members than folds.
inline std::vector<RowIndices> stratified_folds(const FlatDataset& d, const RowIndices& rows,
                                                int k, std::uint64_t seed) {
  RowIndices pos, neg;
  for (auto r : rows) (d.y[r] ? pos : neg).push_back(r);
  return search_detail::deal_folds(std::move(pos), std::move(neg), k, seed);
}

// Same dealing scheme over bare label positions 0..n-1, for callers that
// split before building a feature matrix.
inline std::vector<RowIndices> stratified_folds(const std::vector<std::uint8_t>& labels, int k,
                                                std::uint64_t seed) {
  RowIndices pos, neg;
  for (std::uint32_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  return search_detail::deal_folds(std::move(pos), std::move(neg), k, seed);
}

struct SearchResult {
  ModelConfig best_config;
  int best_draw = -1;
  double best_cv_auroc = 0;
  std::vector<double> draw_scores;  // mean validation AUROC per draw
  TrainedModel model;               // refit on the full training rows
};

inline SearchResult random_search(const FlatDataset& d, const RowIndices& rows,
                                  const SearchSpec& spec) {
  spec.validate();
  const auto folds = stratified_folds(d, rows, spec.cv_folds, spec.seed);

  SearchResult result;
  result.draw_scores.reserve(static_cast<std::size_t>(spec.n_draws));
  for (int draw = 0; draw < spec.n_draws; ++draw) {
    const ModelConfig cfg = draw_config(spec, draw);
    double score_sum = 0;
    for (int f = 0; f < spec.cv_folds; ++f) {
      RowIndices train_rows;
      train_rows.reserve(rows.size());
      for (int g = 0; g < spec.cv_folds; ++g) {
        if (g == f) continue;
        const auto& fold = folds[static_cast<std::size_t>(g)];
        train_rows.insert(train_rows.end(), fold.begin(), fold.end());
      }
      std::sort(train_rows.begin(), train_rows.end());
      const auto& val_rows = folds[static_cast<std::size_t>(f)];
      TrainedModel m = fit_model(d, train_rows, cfg);
      const auto scores = predict_model(m, d, val_rows);
      std::vector<std::uint8_t> y(val_rows.size());
      for (std::size_t i = 0; i < val_rows.size(); ++i) y[i] = d.y[val_rows[i]];
      score_sum += auroc(scores, y);
    }
    const double mean_score = score_sum / static_cast<double>(spec.cv_folds);
    result.draw_scores.push_back(mean_score);
    if (result.best_draw < 0 || mean_score > result.best_cv_auroc) {
      result.best_draw = draw;
      result.best_cv_auroc = mean_score;
      result.best_config = cfg;
    }
  }
  result.model = fit_model(d, rows, result.best_config);
  return result;
}

}  // namespace driftlab
