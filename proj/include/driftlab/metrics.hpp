#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

// Area under the ROC curve via the Mann-Whitney statistic with average
// ranks, so tied scores earn half credit. O(n log n).
inline double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw_eval("auroc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto y : labels) n_pos += y;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw_eval("auroc: needs both classes present, got " + std::to_string(n_pos) +
               " positives out of " + std::to_string(n));
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j share the average rank.
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Standard error of the AUROC from a stratified bootstrap: each replicate
// resamples positives from positives and negatives from negatives, keeping
// class balance fixed. Returns the population standard deviation of the
// replicate AUROCs (0 when n_boot == 1).
inline double auroc_stderr(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           std::uint64_t seed, int n_boot = 200) {
  if (n_boot < 1) throw_config("auroc_stderr: n_boot must be >= 1");
  if (scores.size() != labels.size()) {
    throw_eval("auroc_stderr: scores and labels differ in length");
  }
  std::vector<std::uint32_t> pos_idx, neg_idx;
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    (labels[i] ? pos_idx : neg_idx).push_back(i);
  }
  if (pos_idx.empty() || neg_idx.empty()) {
    throw_eval("auroc_stderr: needs both classes present");
  }
  std::vector<double> reps(static_cast<std::size_t>(n_boot));
  std::vector<double> s(scores.size());
  std::vector<std::uint8_t> y(scores.size());
  for (int b = 0; b < n_boot; ++b) {
    Rng rng = rng_for(seed, b);
    std::size_t k = 0;
    for (std::size_t i = 0; i < pos_idx.size(); ++i, ++k) {
      const auto pick = pos_idx[rng.bounded(pos_idx.size())];
      s[k] = scores[pick];
      y[k] = 1;
    }
    for (std::size_t i = 0; i < neg_idx.size(); ++i, ++k) {
      const auto pick = neg_idx[rng.bounded(neg_idx.size())];
      s[k] = scores[pick];
      y[k] = 0;
    }
    reps[static_cast<std::size_t>(b)] = auroc(s, y);
  }
  double mean = 0;
  for (double r : reps) mean += r;
  mean /= static_cast<double>(n_boot);
  double var = 0;
  for (double r : reps) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n_boot);
  return std::sqrt(var);
}

}  // namespace driftlab
