#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

// Principal component analysis over pooled per-hour feature vectors.
//
// The eigendecomposition is a cyclic Jacobi sweep over the centred
// covariance matrix: deterministic, iterative, run until the off-diagonal
// mass falls below 1e-9 of the matrix norm. No randomness is involved, so
// fitted components are bit-stable across runs and thread counts.

namespace pca_detail {

// Symmetric eigendecomposition via cyclic Jacobi rotations. A is dense
// row-major d x d and is destroyed; eigenvectors come back as columns of
// `vecs` (also row-major d x d).
inline void jacobi_eigen(std::vector<double>& a, int d, std::vector<double>& values,
                         std::vector<double>& vecs, double tol = 1e-9,
                         int max_sweeps = 100) {
  auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * d + c]; };
  vecs.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) vecs[static_cast<std::size_t>(i) * d + i] = 1.0;

  double norm = 0;
  for (double x : a) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0) {
    values.assign(static_cast<std::size_t>(d), 0.0);
    return;
  }

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) off += 2.0 * at(p, q) * at(p, q);
    }
    if (std::sqrt(off) <= tol * norm) break;

    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double app = at(p, p);
        const double aqq = at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < d; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          double& vkp = vecs[static_cast<std::size_t>(k) * d + p];
          double& vkq = vecs[static_cast<std::size_t>(k) * d + q];
          const double tp = vkp;
          const double tq = vkq;
          vkp = c * tp - s * tq;
          vkq = s * tp + c * tq;
        }
      }
    }
  }
  values.assign(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) values[static_cast<std::size_t>(i)] = at(i, i);
}

}  // namespace pca_detail

// Streaming accumulator for the mean vector and covariance matrix of
// row vectors. Rows are fed in a fixed order; no randomness.
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(int dim)
      : dim_(dim),
        n_(0),
        sum_(static_cast<std::size_t>(dim), 0.0),
        cross_(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0) {}

  template <typename Scalar>
  void add(std::span<const Scalar> row) {
    if (static_cast<int>(row.size()) != dim_) {
      throw_data("covariance accumulator: row dimension mismatch");
    }
    for (int i = 0; i < dim_; ++i) {
      const double vi = static_cast<double>(row[static_cast<std::size_t>(i)]);
      sum_[static_cast<std::size_t>(i)] += vi;
      double* cross_row = cross_.data() + static_cast<std::size_t>(i) * dim_;
      for (int j = i; j < dim_; ++j) {
        cross_row[j] += vi * static_cast<double>(row[static_cast<std::size_t>(j)]);
      }
    }
    ++n_;
  }

  std::int64_t count() const { return n_; }
  int dim() const { return dim_; }

  std::vector<double> mean() const {
    std::vector<double> m(sum_);
    for (double& v : m) v /= static_cast<double>(n_);
    return m;
  }

  // Sample covariance (denominator n - 1).
  std::vector<double> covariance() const {
    if (n_ < 2) throw_data("covariance requires at least two rows");
    std::vector<double> m = mean();
    std::vector<double> cov(static_cast<std::size_t>(dim_) * static_cast<std::size_t>(dim_));
    const double denom = static_cast<double>(n_ - 1);
    for (int i = 0; i < dim_; ++i) {
      for (int j = i; j < dim_; ++j) {
        const double cij =
            (cross_[static_cast<std::size_t>(i) * dim_ + j] -
             static_cast<double>(n_) * m[static_cast<std::size_t>(i)] *
                 m[static_cast<std::size_t>(j)]) /
            denom;
        cov[static_cast<std::size_t>(i) * dim_ + j] = cij;
        cov[static_cast<std::size_t>(j) * dim_ + i] = cij;
      }
    }
    return cov;
  }

 private:
  int dim_;
  std::int64_t n_;
  std::vector<double> sum_;
  std::vector<double> cross_;
};

struct PcaModel {
  int dim = 0;
  int k = 0;
  std::vector<double> mean;                // dim
  std::vector<double> components;          // k x dim, row-major, unit rows
  std::vector<double> explained_variance;  // k, non-increasing

  template <typename Scalar>
  void project(std::span<const Scalar> row, std::span<double> out) const {
    if (static_cast<int>(row.size()) != dim || static_cast<int>(out.size()) != k) {
      throw_data("pca projection: dimension mismatch");
    }
    for (int j = 0; j < k; ++j) {
      const double* comp = components.data() + static_cast<std::size_t>(j) * dim;
      double acc = 0;
      for (int i = 0; i < dim; ++i) {
        acc += comp[i] * (static_cast<double>(row[static_cast<std::size_t>(i)]) -
                          mean[static_cast<std::size_t>(i)]);
      }
      out[static_cast<std::size_t>(j)] = acc;
    }
  }
};

inline PcaModel fit_pca(const CovarianceAccumulator& acc, int k) {
  const int d = acc.dim();
  if (k <= 0) throw_config("pca: k must be positive");
  if (k > d) {
    throw_config("pca: k = " + std::to_string(k) + " exceeds input dimension " +
                 std::to_string(d));
  }
  if (acc.count() < 2) throw_data("pca: need at least two training rows");

  std::vector<double> cov = acc.covariance();
  std::vector<double> values, vecs;
  pca_detail::jacobi_eigen(cov, d, values, vecs);

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
  });

  PcaModel model;
  model.dim = d;
  model.k = k;
  model.mean = acc.mean();
  model.components.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(d), 0.0);
  model.explained_variance.assign(static_cast<std::size_t>(k), 0.0);
  for (int j = 0; j < k; ++j) {
    const int src = order[static_cast<std::size_t>(j)];
    double* dst = model.components.data() + static_cast<std::size_t>(j) * d;
    for (int i = 0; i < d; ++i) {
      dst[i] = vecs[static_cast<std::size_t>(i) * d + src];
    }
    // Deterministic sign: the entry with the largest magnitude is positive.
    int arg = 0;
    for (int i = 1; i < d; ++i) {
      if (std::abs(dst[i]) > std::abs(dst[arg])) arg = i;
    }
    if (dst[arg] < 0) {
      for (int i = 0; i < d; ++i) dst[i] = -dst[i];
    }
    model.explained_variance[static_cast<std::size_t>(j)] =
        std::max(0.0, values[static_cast<std::size_t>(src)]);
  }
  return model;
}

template <typename Scalar>
PcaModel fit_pca_rows(std::span<const Scalar> rows, int n, int dim, int k) {
  CovarianceAccumulator acc(dim);
  for (int r = 0; r < n; ++r) {
    acc.add(std::span<const Scalar>(rows.data() + static_cast<std::size_t>(r) * dim,
                                    static_cast<std::size_t>(dim)));
  }
  return fit_pca(acc, k);
}

}  // namespace driftlab
