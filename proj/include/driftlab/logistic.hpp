#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/flat.hpp"

namespace driftlab {

// Logistic regression trained by full-batch proximal gradient descent.
//
// Objective: mean logistic loss + (1 / (C * n)) * penalty, where the
// penalty is 0.5 * ||w||^2 (L2) or ||w||_1 (L1); the intercept is never
// penalised. Steps use a fixed 1/L rate from a power-iteration bound on
// the curvature, with a halving safeguard, so the recorded objective is
// non-increasing across accepted steps. Convergence is declared when the
// gradient norm (L2) or the proximal-step residual (L1) drops below tol.

enum class Penalty { L1, L2 };

struct LrConfig {
  double c = 1.0;  // inverse regularisation strength; larger is weaker
  Penalty penalty = Penalty::L2;
  int max_iter = 1000;
  double tol = 1e-7;
};

struct LrModel {
  std::vector<double> weights;
  double intercept = 0;
  LrConfig config;
  bool converged = false;
  int iterations = 0;
  std::vector<double> loss_history;  // objective after each accepted step
};

namespace lr_detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + exp(z)) without overflow
inline double log1pexp(double z) {
  if (z > 36.0) return z;
  if (z < -36.0) return 0.0;
  return std::log1p(std::exp(z));
}

// Margins, mean loss, and mean gradient in one pass over the rows.
struct PassResult {
  double data_loss = 0;  // mean logistic loss
};

inline PassResult gradient_pass(const FlatDataset& d, const RowIndices& rows,
                                const std::vector<double>& w, double b,
                                std::vector<double>& grad, double& grad_b) {
  const int dim = d.dim;
  std::fill(grad.begin(), grad.end(), 0.0);
  grad_b = 0;
  double loss = 0;
  for (auto r : rows) {
    const float* row = d.x.data() + static_cast<std::size_t>(r) * dim;
    double z = b;
    for (int j = 0; j < dim; ++j) z += w[static_cast<std::size_t>(j)] * row[j];
    const double y = static_cast<double>(d.y[r]);
    loss += log1pexp(z) - y * z;
    const double resid = sigmoid(z) - y;
    for (int j = 0; j < dim; ++j) grad[static_cast<std::size_t>(j)] += resid * row[j];
    grad_b += resid;
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (double& g : grad) g *= inv_n;
  grad_b *= inv_n;
  return {loss * inv_n};
}

inline double objective(double data_loss, const std::vector<double>& w, double lambda,
                        Penalty penalty) {
  double pen = 0;
  if (penalty == Penalty::L2) {
    for (double v : w) pen += v * v;
    pen *= 0.5;
  } else {
    for (double v : w) pen += std::abs(v);
  }
  return data_loss + lambda * pen;
}

// Largest singular value of the (intercept-augmented) design matrix,
// estimated by deterministic power iteration on X^T X.
inline double curvature_bound(const FlatDataset& d, const RowIndices& rows) {
  const int dim = d.dim;
  std::vector<double> v(static_cast<std::size_t>(dim) + 1,
                        1.0 / std::sqrt(static_cast<double>(dim) + 1.0));
  std::vector<double> xv(rows.size());
  double sigma_sq = 1.0;
  for (int it = 0; it < 10; ++it) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const float* row = d.x.data() + static_cast<std::size_t>(rows[i]) * dim;
      double acc = v[static_cast<std::size_t>(dim)];  // augmented 1-column
      for (int j = 0; j < dim; ++j) acc += v[static_cast<std::size_t>(j)] * row[j];
      xv[i] = acc;
    }
    std::vector<double> next(static_cast<std::size_t>(dim) + 1, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const float* row = d.x.data() + static_cast<std::size_t>(rows[i]) * dim;
      for (int j = 0; j < dim; ++j) next[static_cast<std::size_t>(j)] += xv[i] * row[j];
      next[static_cast<std::size_t>(dim)] += xv[i];
    }
    double norm = 0;
    for (double x : next) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0) return 1.0;
    sigma_sq = norm;  // ||X^T X v|| approaches sigma_max^2 for unit v
    for (std::size_t j = 0; j < next.size(); ++j) v[j] = next[j] / norm;
  }
  return sigma_sq;
}

}  // namespace lr_detail

inline LrModel train_lr(const FlatDataset& d, const RowIndices& rows, const LrConfig& cfg) {
  using namespace lr_detail;
  if (rows.size() < 2) throw_eval("logistic regression: need at least two examples");
  auto [neg, pos] = class_counts(d, rows);
  if (neg == 0 || pos == 0) {
    throw_eval("logistic regression: training labels are single-class");
  }
  if (!(cfg.c > 0)) throw_config("logistic regression: C must be positive");

  const int dim = d.dim;
  const double n = static_cast<double>(rows.size());
  const double lambda = 1.0 / (cfg.c * n);

  LrModel model;
  model.config = cfg;
  model.weights.assign(static_cast<std::size_t>(dim), 0.0);

  // Smoothness of the mean logistic loss is sigma_max^2 / (4n); the L2
  // penalty adds lambda.
  const double l_smooth =
      1.05 * curvature_bound(d, rows) / (4.0 * n) + (cfg.penalty == Penalty::L2 ? lambda : 0.0);
  double step = 1.0 / l_smooth;

  std::vector<double> grad(static_cast<std::size_t>(dim));
  double grad_b = 0;
  PassResult pass = gradient_pass(d, rows, model.weights, model.intercept, grad, grad_b);
  double obj = objective(pass.data_loss, model.weights, lambda, cfg.penalty);
  model.loss_history.push_back(obj);

  std::vector<double> w_next(static_cast<std::size_t>(dim));
  for (int it = 0; it < cfg.max_iter; ++it) {
    // Convergence check on the current point.
    if (cfg.penalty == Penalty::L2) {
      double gnorm = grad_b * grad_b;
      for (int j = 0; j < dim; ++j) {
        const double gj = grad[static_cast<std::size_t>(j)] +
                          lambda * model.weights[static_cast<std::size_t>(j)];
        gnorm += gj * gj;
      }
      if (std::sqrt(gnorm) <= cfg.tol) {
        model.converged = true;
        break;
      }
    } else {
      double rnorm = grad_b * grad_b;
      for (int j = 0; j < dim; ++j) {
        const double wj = model.weights[static_cast<std::size_t>(j)];
        double cand = wj - step * grad[static_cast<std::size_t>(j)];
        const double thresh = step * lambda;
        cand = cand > thresh ? cand - thresh : (cand < -thresh ? cand + thresh : 0.0);
        const double r = (wj - cand) / step;
        rnorm += r * r;
      }
      if (std::sqrt(rnorm) <= cfg.tol) {
        model.converged = true;
        break;
      }
    }

    // Proximal step with halving safeguard: never accept an increase.
    double trial_step = step;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (int j = 0; j < dim; ++j) {
        const std::size_t js = static_cast<std::size_t>(j);
        double cand;
        if (cfg.penalty == Penalty::L2) {
          cand = model.weights[js] - trial_step * (grad[js] + lambda * model.weights[js]);
        } else {
          cand = model.weights[js] - trial_step * grad[js];
          const double thresh = trial_step * lambda;
          cand = cand > thresh ? cand - thresh : (cand < -thresh ? cand + thresh : 0.0);
        }
        w_next[js] = cand;
      }
      const double b_next = model.intercept - trial_step * grad_b;
      std::vector<double> grad_next(static_cast<std::size_t>(dim));
      double grad_b_next = 0;
      PassResult next_pass = gradient_pass(d, rows, w_next, b_next, grad_next, grad_b_next);
      const double next_obj = objective(next_pass.data_loss, w_next, lambda, cfg.penalty);
      if (next_obj <= obj + 1e-12) {
        model.weights.swap(w_next);
        model.intercept = b_next;
        grad.swap(grad_next);
        grad_b = grad_b_next;
        obj = next_obj;
        model.loss_history.push_back(obj);
        break;
      }
      trial_step *= 0.5;
    }
    model.iterations = it + 1;
  }
  return model;
}

inline LrModel train_lr(const FlatDataset& d, const LrConfig& cfg) {
  return train_lr(d, all_rows(d), cfg);
}

inline std::vector<double> predict_lr(const LrModel& m, const FlatDataset& d,
                                      const RowIndices& rows) {
  if (static_cast<int>(m.weights.size()) != d.dim) {
    throw_data("logistic regression: model expects " + std::to_string(m.weights.size()) +
               " features, dataset has " + std::to_string(d.dim));
  }
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const float* row = d.x.data() + static_cast<std::size_t>(rows[i]) * d.dim;
    double z = m.intercept;
    for (int j = 0; j < d.dim; ++j) z += m.weights[static_cast<std::size_t>(j)] * row[j];
    out[i] = lr_detail::sigmoid(z);
  }
  return out;
}

inline std::vector<double> predict_lr(const LrModel& m, const FlatDataset& d) {
  return predict_lr(m, d, all_rows(d));
}

}  // namespace driftlab
