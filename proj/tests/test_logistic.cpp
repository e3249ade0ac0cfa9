#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/logistic.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/rng.hpp"
#include "test_util.hpp"

using namespace driftlab;
using driftlab::testutil::make_flat;

namespace {

// Two unit-variance Gaussian classes at means -mu and +mu along the first
// coordinate; remaining coordinates are pure noise.
FlatDataset gaussian_pair(int n_per_class, int dim, double mu, std::uint64_t seed) {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  Rng r(seed);
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const bool pos = i % 2 == 1;
    std::vector<float> row(static_cast<std::size_t>(dim));
    row[0] = static_cast<float>((pos ? mu : -mu) + r.normal());
    for (int j = 1; j < dim; ++j) row[static_cast<std::size_t>(j)] = static_cast<float>(r.normal());
    rows.push_back(std::move(row));
    labels.push_back(pos ? 1 : 0);
  }
  return make_flat(rows, labels);
}

double l2_norm(const std::vector<double>& w) {
  double s = 0;
  for (double v : w) s += v * v;
  return std::sqrt(s);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("perfectly separable data is ranked perfectly", "[logistic]") {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({-1.0f});
    labels.push_back(0);
    rows.push_back({+1.0f});
    labels.push_back(1);
  }
  const FlatDataset d = make_flat(rows, labels);
  LrConfig cfg;
  cfg.c = 1000.0;
  cfg.max_iter = 500;
  const LrModel m = train_lr(d, cfg);
  const auto scores = predict_lr(m, d);
  CHECK(auroc(scores, d.y) == 1.0);
  CHECK(m.weights[0] > 0.0);
}

TEST_CASE("constant features yield the base rate and zero weights", "[logistic]") {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({0.7f, -1.3f});
    labels.push_back(i % 2 == 0 ? 1 : 0);
  }
  const FlatDataset d = make_flat(rows, labels);
  LrConfig cfg;
  cfg.max_iter = 2000;
  const LrModel m = train_lr(d, cfg);
  CHECK(std::abs(m.weights[0]) < 1e-3);
  CHECK(std::abs(m.weights[1]) < 1e-3);
  const auto scores = predict_lr(m, d);
  CHECK(std::abs(scores[0] - 0.5) < 1e-3);
}

TEST_CASE("auroc approaches the analytic optimum on gaussian classes", "[logistic]") {
  // Classes N(-1, I) and N(+1, I) along one axis: the best possible ranker
  // scores by that coordinate, giving AUROC = Phi(2 / sqrt(2)).
  const double bayes = normal_cdf(2.0 / std::sqrt(2.0));
  const FlatDataset train = gaussian_pair(1000, 4, 1.0, 11);
  const FlatDataset test = gaussian_pair(1000, 4, 1.0, 12);
  LrConfig cfg;
  cfg.c = 1.0;
  cfg.max_iter = 300;
  const LrModel m = train_lr(train, cfg);
  const double a = auroc(predict_lr(m, test), test.y);
  CHECK_THAT(a, Catch::Matchers::WithinAbs(bayes, 0.02));
}

TEST_CASE("weight norm grows with C under l2", "[logistic]") {
  const FlatDataset d = gaussian_pair(200, 5, 0.8, 21);
  auto norm_at = [&](double c) {
    LrConfig cfg;
    cfg.c = c;
    cfg.penalty = Penalty::L2;
    cfg.max_iter = 3000;
    return l2_norm(train_lr(d, cfg).weights);
  };
  const double w_strong = norm_at(0.01);
  const double w_mid = norm_at(1.0);
  const double w_weak = norm_at(100.0);
  CHECK(w_strong < w_mid);
  CHECK(w_mid < w_weak);
  CHECK(w_strong > 0.0);
}

TEST_CASE("l1 drives noise weights to exact zero", "[logistic]") {
  // One informative coordinate, seven pure-noise coordinates: with a
  // strong l1 penalty the noise weights are exactly zero, not merely small.
  const FlatDataset d = gaussian_pair(300, 8, 1.5, 31);
  LrConfig cfg;
  cfg.c = 0.02;
  cfg.penalty = Penalty::L1;
  cfg.max_iter = 3000;
  const LrModel m = train_lr(d, cfg);
  CHECK(m.weights[0] > 0.0);
  int exact_zeros = 0;
  for (std::size_t j = 1; j < m.weights.size(); ++j) {
    if (m.weights[j] == 0.0) ++exact_zeros;
  }
  CHECK(exact_zeros >= 5);
}

TEST_CASE("objective history never increases", "[logistic]") {
  const FlatDataset d = gaussian_pair(150, 6, 0.5, 41);
  for (Penalty p : {Penalty::L1, Penalty::L2}) {
    LrConfig cfg;
    cfg.penalty = p;
    cfg.c = 0.5;
    cfg.max_iter = 200;
    const LrModel m = train_lr(d, cfg);
    REQUIRE(m.loss_history.size() >= 2u);
    for (std::size_t i = 1; i < m.loss_history.size(); ++i) {
      CHECK(m.loss_history[i] <= m.loss_history[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("training is deterministic", "[logistic]") {
  const FlatDataset d = gaussian_pair(100, 4, 0.7, 51);
  LrConfig cfg;
  cfg.max_iter = 150;
  const LrModel a = train_lr(d, cfg);
  const LrModel b = train_lr(d, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.intercept == b.intercept);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("single-class training labels are rejected", "[logistic]") {
  std::vector<std::vector<float>> rows{{0.0f}, {1.0f}, {2.0f}};
  std::vector<std::uint8_t> labels{1, 1, 1};
  const FlatDataset d = make_flat(rows, labels);
  try {
    train_lr(d, LrConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Eval);
    CHECK(std::string(e.what()).find("single-class") != std::string::npos);
  }
}

TEST_CASE("invalid C is a config error", "[logistic]") {
  const FlatDataset d = gaussian_pair(10, 2, 1.0, 61);
  LrConfig cfg;
  cfg.c = 0.0;
  CHECK_THROWS_AS(train_lr(d, cfg), Error);
}

TEST_CASE("prediction rejects dimension mismatch", "[logistic]") {
  const FlatDataset d2 = gaussian_pair(20, 2, 1.0, 71);
  const FlatDataset d3 = gaussian_pair(20, 3, 1.0, 72);
  LrConfig cfg;
  cfg.max_iter = 50;
  const LrModel m = train_lr(d2, cfg);
  CHECK_THROWS_AS(predict_lr(m, d3), Error);
}

TEST_CASE("tiny C shrinks weights toward zero", "[logistic]") {
  const FlatDataset d = gaussian_pair(200, 3, 1.0, 81);
  LrConfig cfg;
  cfg.c = 1e-6;
  cfg.penalty = Penalty::L2;
  cfg.max_iter = 2000;
  const LrModel m = train_lr(d, cfg);
  CHECK(l2_norm(m.weights) < 1e-2);
}
