#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/pca.hpp"
#include "driftlab/rng.hpp"

using namespace driftlab;

namespace {

// n x dim row-major sample with independent axis variances, rotated by an
// orthogonal mixing of coordinate pairs so components are non-trivial.
std::vector<double> make_sample(int n, const std::vector<double>& axis_sd, std::uint64_t seed) {
  const int dim = static_cast<int>(axis_sd.size());
  Rng r(seed);
  std::vector<double> x(static_cast<std::size_t>(n) * dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) {
      x[static_cast<std::size_t>(i) * dim + j] = axis_sd[static_cast<std::size_t>(j)] * r.normal();
    }
    // Mix neighbouring coordinates with a fixed rotation (angle 0.6).
    const double c = std::cos(0.6), s = std::sin(0.6);
    for (int j = 0; j + 1 < dim; j += 2) {
      double& a = x[static_cast<std::size_t>(i) * dim + j];
      double& b = x[static_cast<std::size_t>(i) * dim + j + 1];
      const double a2 = c * a - s * b;
      const double b2 = s * a + c * b;
      a = a2;
      b = b2;
    }
  }
  return x;
}

}  // namespace

TEST_CASE("dominant axis of a diagonal stretch is recovered", "[pca]") {
  // Points concentrated along (1,1)/sqrt(2) with tiny orthogonal noise.
  Rng r(3);
  const int n = 5000;
  std::vector<double> x(static_cast<std::size_t>(n) * 2);
  const double inv = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * r.normal();
    const double e = 0.01 * r.normal();
    x[static_cast<std::size_t>(i) * 2] = t * inv + e * inv;
    x[static_cast<std::size_t>(i) * 2 + 1] = t * inv - e * inv;
  }
  const PcaModel m = fit_pca_rows(std::span<const double>(x), n, 2, 1);
  REQUIRE(m.k == 1);
  CHECK_THAT(m.components[0], Catch::Matchers::WithinAbs(inv, 1e-3));
  CHECK_THAT(m.components[1], Catch::Matchers::WithinAbs(inv, 1e-3));
  CHECK_THAT(m.explained_variance[0], Catch::Matchers::WithinAbs(4.0, 0.2));
}

TEST_CASE("full-rank projection preserves pairwise distances", "[pca]") {
  const int n = 40, dim = 4;
  const std::vector<double> x = make_sample(n, {3.0, 2.0, 1.0, 0.5}, 7);
  const PcaModel m = fit_pca_rows(std::span<const double>(x), n, dim, dim);
  std::vector<double> proj(static_cast<std::size_t>(n) * dim);
  for (int i = 0; i < n; ++i) {
    m.project(std::span<const double>(x.data() + static_cast<std::size_t>(i) * dim,
                                      static_cast<std::size_t>(dim)),
              std::span<double>(proj.data() + static_cast<std::size_t>(i) * dim,
                                static_cast<std::size_t>(dim)));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d_orig = 0, d_proj = 0;
      for (int k = 0; k < dim; ++k) {
        const double a = x[static_cast<std::size_t>(i) * dim + k] -
                         x[static_cast<std::size_t>(j) * dim + k];
        const double b = proj[static_cast<std::size_t>(i) * dim + k] -
                         proj[static_cast<std::size_t>(j) * dim + k];
        d_orig += a * a;
        d_proj += b * b;
      }
      REQUIRE_THAT(std::sqrt(d_proj), Catch::Matchers::WithinAbs(std::sqrt(d_orig), 1e-6));
    }
  }
}

TEST_CASE("components match a dense eigensolver", "[pca]") {
  const int n = 400, dim = 5, k = 3;
  const std::vector<double> x = make_sample(n, {5.0, 3.0, 2.0, 1.0, 0.5}, 11);

  CovarianceAccumulator acc(dim);
  for (int i = 0; i < n; ++i) {
    acc.add(std::span<const double>(x.data() + static_cast<std::size_t>(i) * dim,
                                    static_cast<std::size_t>(dim)));
  }
  const PcaModel m = fit_pca(acc, k);

  // Oracle: two-pass covariance and Eigen's symmetric eigensolver.
  Eigen::MatrixXd X(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) X(i, j) = x[static_cast<std::size_t>(i) * dim + j];
  }
  const Eigen::RowVectorXd mu = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  REQUIRE(es.info() == Eigen::Success);

  for (int j = 0; j < dim; ++j) {
    REQUIRE_THAT(m.mean[static_cast<std::size_t>(j)],
                 Catch::Matchers::WithinAbs(mu(j), 1e-10));
  }
  for (int c = 0; c < k; ++c) {
    // Eigen sorts eigenvalues ascending; component c matches index dim-1-c.
    const int src = dim - 1 - c;
    REQUIRE_THAT(m.explained_variance[static_cast<std::size_t>(c)],
                 Catch::Matchers::WithinAbs(es.eigenvalues()(src), 1e-8));
    Eigen::VectorXd v = es.eigenvectors().col(src);
    // Apply the same sign convention: largest-magnitude entry positive.
    int arg = 0;
    for (int j = 1; j < dim; ++j) {
      if (std::abs(v(j)) > std::abs(v(arg))) arg = j;
    }
    if (v(arg) < 0) v = -v;
    for (int j = 0; j < dim; ++j) {
      REQUIRE_THAT(m.components[static_cast<std::size_t>(c) * dim + j],
                   Catch::Matchers::WithinAbs(v(j), 1e-8));
    }
  }
}

TEST_CASE("components are orthonormal", "[pca]") {
  const int n = 300, dim = 8;
  const std::vector<double> x = make_sample(n, {4, 3, 2.5, 2, 1.5, 1, 0.7, 0.3}, 13);
  const PcaModel m = fit_pca_rows(std::span<const double>(x), n, dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      double dot = 0;
      for (int j = 0; j < dim; ++j) {
        dot += m.components[static_cast<std::size_t>(a) * dim + j] *
               m.components[static_cast<std::size_t>(b) * dim + j];
      }
      REQUIRE_THAT(dot, Catch::Matchers::WithinAbs(a == b ? 1.0 : 0.0, 1e-6));
    }
  }
}

TEST_CASE("explained variance is non-negative and non-increasing", "[pca]") {
  const int n = 200, dim = 6;
  const std::vector<double> x = make_sample(n, {3, 3, 2, 1, 1, 0.5}, 17);
  const PcaModel m = fit_pca_rows(std::span<const double>(x), n, dim, dim);
  for (int c = 0; c < dim; ++c) {
    REQUIRE(m.explained_variance[static_cast<std::size_t>(c)] >= 0.0);
    if (c > 0) {
      REQUIRE(m.explained_variance[static_cast<std::size_t>(c)] <=
              m.explained_variance[static_cast<std::size_t>(c - 1)] + 1e-12);
    }
  }
}

TEST_CASE("projection of the training mean is the origin", "[pca]") {
  const int n = 100, dim = 3;
  const std::vector<double> x = make_sample(n, {2, 1, 0.5}, 19);
  const PcaModel m = fit_pca_rows(std::span<const double>(x), n, dim, 2);
  std::vector<double> out(2);
  m.project(std::span<const double>(m.mean.data(), m.mean.size()), std::span<double>(out));
  CHECK_THAT(out[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(out[1], Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("covariance accumulator matches the two-pass formula", "[pca]") {
  const int n = 50, dim = 3;
  const std::vector<double> x = make_sample(n, {1.5, 1.0, 0.25}, 23);
  CovarianceAccumulator acc(dim);
  for (int i = 0; i < n; ++i) {
    acc.add(std::span<const double>(x.data() + static_cast<std::size_t>(i) * dim,
                                    static_cast<std::size_t>(dim)));
  }
  // Two-pass oracle.
  std::vector<double> mu(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) mu[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(i) * dim + j];
  }
  for (double& v : mu) v /= n;
  std::vector<double> cov(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        cov[static_cast<std::size_t>(a) * dim + b] +=
            (x[static_cast<std::size_t>(i) * dim + a] - mu[static_cast<std::size_t>(a)]) *
            (x[static_cast<std::size_t>(i) * dim + b] - mu[static_cast<std::size_t>(b)]);
      }
    }
  }
  for (double& v : cov) v /= (n - 1);
  const auto got = acc.covariance();
  for (std::size_t i = 0; i < cov.size(); ++i) {
    REQUIRE_THAT(got[i], Catch::Matchers::WithinAbs(cov[i], 1e-10));
  }
}

TEST_CASE("invalid k is a config error", "[pca]") {
  const std::vector<double> x = make_sample(10, {1, 1}, 29);
  CHECK_THROWS_AS(fit_pca_rows(std::span<const double>(x), 10, 2, 3), Error);
  CHECK_THROWS_AS(fit_pca_rows(std::span<const double>(x), 10, 2, 0), Error);
  try {
    fit_pca_rows(std::span<const double>(x), 10, 2, 5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("exceeds") != std::string::npos);
  }
}

TEST_CASE("fewer than two rows is a data error", "[pca]") {
  CovarianceAccumulator acc(2);
  const std::vector<double> row{1.0, 2.0};
  acc.add(std::span<const double>(row));
  CHECK_THROWS_AS(fit_pca(acc, 1), Error);
}

TEST_CASE("fitting is deterministic", "[pca]") {
  const int n = 150, dim = 5;
  const std::vector<double> x = make_sample(n, {3, 2, 1.5, 1, 0.5}, 31);
  const PcaModel a = fit_pca_rows(std::span<const double>(x), n, dim, 3);
  const PcaModel b = fit_pca_rows(std::span<const double>(x), n, dim, 3);
  CHECK(a.components == b.components);
  CHECK(a.explained_variance == b.explained_variance);
  CHECK(a.mean == b.mean);
}
