#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/forest.hpp"
#include "driftlab/logistic.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/rng.hpp"
#include "test_util.hpp"

using namespace driftlab;
using driftlab::testutil::make_flat;

namespace {

FlatDataset xor_data(int n, std::uint64_t seed) {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  Rng r(seed);
  for (int i = 0; i < n; ++i) {
    const double a = r.uniform(-1.0, 1.0);
    const double b = r.uniform(-1.0, 1.0);
    rows.push_back({static_cast<float>(a), static_cast<float>(b)});
    labels.push_back(((a > 0) != (b > 0)) ? 1 : 0);
  }
  return make_flat(rows, labels);
}

// Independent traversal oracle: recursive descent instead of the loop in
// the implementation.
double tree_score_recursive(const Tree& t, const float* row, int node) {
  const TreeNode& nd = t.nodes[static_cast<std::size_t>(node)];
  if (nd.feature < 0) return nd.value;
  return tree_score_recursive(t, row, row[nd.feature] <= nd.threshold ? nd.left : nd.right);
}

}  // namespace

TEST_CASE("forest learns xor while a linear model cannot", "[forest]") {
  const FlatDataset train = xor_data(400, 5);
  const FlatDataset test = xor_data(400, 6);

  RfConfig rf;
  rf.n_estimators = 50;
  rf.max_depth = 6;
  rf.seed = 3;
  const RfModel forest = train_rf(train, rf);
  const double rf_auroc = auroc(predict_rf(forest, test), test.y);
  CHECK(rf_auroc > 0.95);

  LrConfig lr;
  lr.max_iter = 500;
  const LrModel linear = train_lr(train, lr);
  const double lr_auroc = auroc(predict_lr(linear, test), test.y);
  CHECK(lr_auroc > 0.35);
  CHECK(lr_auroc < 0.65);
}

TEST_CASE("a depth-1 stump recovers the split midpoint exactly", "[forest]") {
  // Two clusters of repeated values: the sole split boundary is between
  // 1.0 and 2.0, so every tree's root threshold is their midpoint.
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({1.0f});
    labels.push_back(0);
    rows.push_back({2.0f});
    labels.push_back(1);
  }
  const FlatDataset d = make_flat(rows, labels);
  RfConfig cfg;
  cfg.n_estimators = 5;
  cfg.max_depth = 1;
  cfg.seed = 9;
  const RfModel m = train_rf(d, cfg);
  for (const Tree& t : m.trees) {
    REQUIRE(t.nodes.size() == 3u);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == 1.5);
    CHECK(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value == 0.0);
    CHECK(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value == 1.0);
  }
  const FlatDataset probe = make_flat({{1.2f}, {1.8f}}, {0, 1});
  const auto scores = predict_rf(m, probe);
  CHECK(scores[0] == 0.0);
  CHECK(scores[1] == 1.0);
}

TEST_CASE("thresholded rule is recovered with distinct values", "[forest]") {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 1; i <= 40; ++i) {
    rows.push_back({static_cast<float>(i)});
    labels.push_back(i > 20 ? 1 : 0);
  }
  const FlatDataset d = make_flat(rows, labels);
  RfConfig cfg;
  cfg.n_estimators = 200;
  cfg.max_depth = 3;
  cfg.seed = 17;
  const RfModel m = train_rf(d, cfg);
  const FlatDataset probe = make_flat({{15.0f}, {26.0f}}, {0, 1});
  const auto scores = predict_rf(m, probe);
  CHECK(scores[0] < 0.5);
  CHECK(scores[1] > 0.5);
}

TEST_CASE("prediction matches an independent recursive traversal", "[forest]") {
  Rng r(23);
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 300; ++i) {
    std::vector<float> row(6);
    for (auto& v : row) v = static_cast<float>(r.normal());
    const bool y = (row[0] + 0.5 * row[1] * row[1] + 0.3 * r.normal()) > 0.25;
    rows.push_back(std::move(row));
    labels.push_back(y ? 1 : 0);
  }
  const FlatDataset train = make_flat(rows, labels);
  RfConfig cfg;
  cfg.n_estimators = 10;
  cfg.max_depth = 5;
  cfg.feature_fraction = 0.6;
  cfg.seed = 101;
  const RfModel m = train_rf(train, cfg);

  std::vector<std::vector<float>> test_rows;
  for (int i = 0; i < 200; ++i) {
    std::vector<float> row(6);
    for (auto& v : row) v = static_cast<float>(r.normal());
    test_rows.push_back(std::move(row));
  }
  const FlatDataset test = make_flat(test_rows, std::vector<std::uint8_t>(200, 0));
  const auto fast = predict_rf(m, test);
  for (std::size_t i = 0; i < test.n(); ++i) {
    double acc = 0;
    for (const Tree& t : m.trees) acc += tree_score_recursive(t, test.row(i).data(), 0);
    const double expected = acc / static_cast<double>(m.trees.size());
    REQUIRE(fast[i] == expected);
    REQUIRE(fast[i] >= 0.0);
    REQUIRE(fast[i] <= 1.0);
  }
}

TEST_CASE("fully grown trees have pure leaves", "[forest]") {
  Rng r(31);
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 120; ++i) {
    rows.push_back({static_cast<float>(r.normal()), static_cast<float>(r.normal())});
    labels.push_back(r.bernoulli(0.5) ? 1 : 0);
  }
  const FlatDataset d = make_flat(rows, labels);
  RfConfig cfg;
  cfg.n_estimators = 8;
  cfg.max_depth = 40;
  cfg.min_samples_leaf = 1;
  cfg.min_samples_split = 2;
  cfg.seed = 77;
  const RfModel m = train_rf(d, cfg);
  for (const Tree& t : m.trees) {
    for (const TreeNode& nd : t.nodes) {
      if (nd.feature < 0) {
        CHECK((nd.value == 0.0 || nd.value == 1.0));
      }
    }
  }
}

TEST_CASE("training is deterministic in the seed", "[forest]") {
  const FlatDataset d = xor_data(200, 13);
  RfConfig cfg;
  cfg.n_estimators = 12;
  cfg.max_depth = 4;
  cfg.seed = 5;
  const RfModel a = train_rf(d, cfg);
  const RfModel b = train_rf(d, cfg);
  REQUIRE(a.trees.size() == b.trees.size());
  const auto pa = predict_rf(a, d);
  const auto pb = predict_rf(b, d);
  CHECK(pa == pb);
  cfg.seed = 6;
  const RfModel c = train_rf(d, cfg);
  CHECK(predict_rf(c, d) != pa);
}

TEST_CASE("forest prediction is invariant to feature order", "[forest]") {
  // Reversing the columns (and their ids) must leave every prediction
  // bit-identical: the per-node feature subset is keyed on feature-id
  // hashes, not on column positions.
  Rng r(41);
  const int dim = 6;
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 250; ++i) {
    std::vector<float> row(static_cast<std::size_t>(dim));
    for (auto& v : row) v = static_cast<float>(r.normal());
    rows.push_back(row);
    labels.push_back((row[1] + row[4] + 0.5 * r.normal()) > 0 ? 1 : 0);
  }
  FlatDataset fwd = make_flat(rows, labels);

  FlatDataset rev;
  rev.dim = dim;
  for (int j = dim - 1; j >= 0; --j) rev.feature_ids.push_back(fwd.feature_ids[static_cast<std::size_t>(j)]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<float> rrow(rows[i].rbegin(), rows[i].rend());
    rev.add_row(std::span<const float>(rrow.data(), rrow.size()), labels[i],
                static_cast<StayId>(i));
  }

  RfConfig cfg;
  cfg.n_estimators = 15;
  cfg.max_depth = 5;
  cfg.feature_fraction = 0.5;
  cfg.seed = 19;
  const RfModel mf = train_rf(fwd, cfg);
  const RfModel mr = train_rf(rev, cfg);
  const auto pf = predict_rf(mf, fwd);
  const auto pr = predict_rf(mr, rev);
  REQUIRE(pf.size() == pr.size());
  for (std::size_t i = 0; i < pf.size(); ++i) REQUIRE(pf[i] == pr[i]);
}

TEST_CASE("logistic prediction is stable under feature order", "[forest]") {
  // The linear model sums coordinates in column order, so reversal only
  // perturbs rounding; predictions agree to high precision.
  Rng r(47);
  const int dim = 5;
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 200; ++i) {
    std::vector<float> row(static_cast<std::size_t>(dim));
    for (auto& v : row) v = static_cast<float>(r.normal());
    rows.push_back(row);
    labels.push_back((row[0] - row[3] + 0.8 * r.normal()) > 0 ? 1 : 0);
  }
  FlatDataset fwd = make_flat(rows, labels);
  FlatDataset rev;
  rev.dim = dim;
  for (int j = dim - 1; j >= 0; --j) rev.feature_ids.push_back(fwd.feature_ids[static_cast<std::size_t>(j)]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<float> rrow(rows[i].rbegin(), rows[i].rend());
    rev.add_row(std::span<const float>(rrow.data(), rrow.size()), labels[i],
                static_cast<StayId>(i));
  }
  LrConfig cfg;
  cfg.max_iter = 100;
  const LrModel mf = train_lr(fwd, cfg);
  const LrModel mr = train_lr(rev, cfg);
  const auto pf = predict_lr(mf, fwd);
  const auto pr = predict_lr(mr, rev);
  for (std::size_t i = 0; i < pf.size(); ++i) {
    REQUIRE_THAT(pf[i], Catch::Matchers::WithinAbs(pr[i], 1e-7));
  }
}

TEST_CASE("prediction rejects dimension mismatch naming both sizes", "[forest]") {
  const FlatDataset d5 = make_flat({{1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}}, {0, 1});
  RfConfig cfg;
  cfg.n_estimators = 1;
  cfg.max_depth = 2;
  const RfModel m = train_rf(d5, cfg);
  const FlatDataset d3 = make_flat({{1, 2, 3}}, {0});
  try {
    predict_rf(m, d3);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find('5') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
}

TEST_CASE("invalid forest configs are rejected", "[forest]") {
  const FlatDataset d = make_flat({{0.0f}, {1.0f}}, {0, 1});
  RfConfig cfg;
  cfg.n_estimators = 0;
  CHECK_THROWS_AS(train_rf(d, cfg), Error);
  cfg = RfConfig{};
  cfg.feature_fraction = 0.0;
  CHECK_THROWS_AS(train_rf(d, cfg), Error);
  cfg = RfConfig{};
  cfg.feature_fraction = 1.5;
  CHECK_THROWS_AS(train_rf(d, cfg), Error);
  CHECK_THROWS_AS(train_rf(make_flat({{0.0f}, {1.0f}}, {1, 1}), RfConfig{}), Error);
}
