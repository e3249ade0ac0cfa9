#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/serialize.hpp"

using namespace driftlab;

namespace {

ser_detail::DocReader reader_for(const std::string& text) {
  return ser_detail::DocReader(text, "mem");
}

}  // namespace

TEST_CASE("normalizer round-trips exactly", "[serialize]") {
  Normalizer n;
  n.columns = {"h0:item_000123:v", "h3:glucose", "weird col"};
  n.mean = {0.1, -2.5e-7, 123456.789};
  n.stddev = {1.0, 3.14159, 1e-12};
  n.floored = {0, 0, 1};
  const std::string doc = to_document(n, [](std::ostream& o, const Normalizer& v) {
    write_normalizer(o, v);
  });
  auto r = reader_for(doc);
  const Normalizer back = read_normalizer(r);
  CHECK(back.columns == n.columns);
  CHECK(back.mean == n.mean);
  CHECK(back.stddev == n.stddev);
  REQUIRE(back.floored.size() == n.floored.size());
  for (std::size_t i = 0; i < n.floored.size(); ++i) {
    CHECK((back.floored[i] != 0) == (n.floored[i] != 0));
  }
}

TEST_CASE("pca model round-trips exactly", "[serialize]") {
  PcaModel m;
  m.dim = 3;
  m.k = 2;
  m.mean = {0.5, -1.25, 3e-9};
  m.explained_variance = {2.5, 0.125};
  m.components = {1.0, 0.0, 0.0, 0.0, 0.7071067811865476, -0.7071067811865476};
  const std::string doc = to_document(m, [](std::ostream& o, const PcaModel& v) {
    write_pca(o, v);
  });
  auto r = reader_for(doc);
  const PcaModel back = read_pca(r);
  CHECK(back.dim == m.dim);
  CHECK(back.k == m.k);
  CHECK(back.mean == m.mean);
  CHECK(back.explained_variance == m.explained_variance);
  CHECK(back.components == m.components);
}

TEST_CASE("logistic model round-trips exactly", "[serialize]") {
  LrModel m;
  m.config.c = 0.037;
  m.config.penalty = Penalty::L1;
  m.config.max_iter = 250;
  m.config.tol = 1e-7;
  m.converged = true;
  m.iterations = 113;
  m.intercept = -0.4421;
  m.weights = {0.0, 1.5, -2.25e-5, 0.333333333333333314829616256247};
  const std::string doc = to_document(m, [](std::ostream& o, const LrModel& v) {
    write_lr(o, v);
  });
  auto r = reader_for(doc);
  const LrModel back = read_lr(r);
  CHECK(back.config.c == m.config.c);
  CHECK(back.config.penalty == m.config.penalty);
  CHECK(back.config.max_iter == m.config.max_iter);
  CHECK(back.config.tol == m.config.tol);
  CHECK(back.converged == m.converged);
  CHECK(back.iterations == m.iterations);
  CHECK(back.intercept == m.intercept);
  CHECK(back.weights == m.weights);
}

TEST_CASE("forest model round-trips exactly", "[serialize]") {
  RfModel m;
  m.config.n_estimators = 2;
  m.config.max_depth = 4;
  m.config.min_samples_split = 2;
  m.config.min_samples_leaf = 1;
  m.config.feature_fraction = 0.0125;
  m.config.seed = 987654321;
  m.dim = 5;
  Tree t0;
  t0.nodes.push_back(TreeNode{2, 0.75, 1, 2, 0.5, 10});
  t0.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 1.0, 4});
  t0.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0.16666666666666666, 6});
  Tree t1;
  t1.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0.3, 10});
  m.trees = {t0, t1};
  const std::string doc = to_document(m, [](std::ostream& o, const RfModel& v) {
    write_rf(o, v);
  });
  auto r = reader_for(doc);
  const RfModel back = read_rf(r);
  CHECK(back.config.n_estimators == m.config.n_estimators);
  CHECK(back.config.feature_fraction == m.config.feature_fraction);
  CHECK(back.config.seed == m.config.seed);
  CHECK(back.dim == m.dim);
  REQUIRE(back.trees.size() == 2u);
  REQUIRE(back.trees[0].nodes.size() == 3u);
  CHECK(back.trees[0].nodes[0].feature == 2);
  CHECK(back.trees[0].nodes[0].threshold == 0.75);
  CHECK(back.trees[0].nodes[2].value == 0.16666666666666666);
  CHECK(back.trees[1].nodes[0].count == 10);
}

TEST_CASE("trained model wrapper dispatches on family", "[serialize]") {
  TrainedModel m;
  m.family = ModelFamily::Lr;
  m.lr.config.c = 1.0;
  m.lr.config.penalty = Penalty::L1;
  m.lr.config.max_iter = 10;
  m.lr.config.tol = 1e-7;
  m.lr.intercept = 0.25;
  m.lr.weights = {1.0, -1.0};
  const std::string doc = to_document(m, [](std::ostream& o, const TrainedModel& v) {
    write_trained_model(o, v);
  });
  CHECK(doc.rfind("format\tdriftlab.model\t1\n", 0) == 0);
  auto r = reader_for(doc);
  const TrainedModel back = read_trained_model(r);
  CHECK(back.family == ModelFamily::Lr);
  CHECK(back.lr.weights == m.lr.weights);
  CHECK(back.lr.intercept == m.lr.intercept);
}

TEST_CASE("serialized scores survive a write/read cycle bit-for-bit", "[serialize]") {
  // Train-free check of the shortest round-trip guarantee applied to model
  // weights: random extreme doubles written and read back compare equal.
  Rng rng(55);
  LrModel m;
  m.config.c = 1.0;
  m.config.penalty = Penalty::L2;
  m.config.max_iter = 1;
  m.config.tol = 1e-7;
  for (int i = 0; i < 200; ++i) {
    m.weights.push_back((rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform(-30, 30)));
  }
  const std::string doc = to_document(m, [](std::ostream& o, const LrModel& v) {
    write_lr(o, v);
  });
  auto r = reader_for(doc);
  CHECK(read_lr(r).weights == m.weights);
}

TEST_CASE("format header is checked for name and version", "[serialize]") {
  {
    auto r = reader_for("format\tdriftlab.pca\t1\n");
    CHECK_THROWS_WITH(read_normalizer(r),
                      Catch::Matchers::ContainsSubstring("driftlab.normalizer"));
  }
  {
    auto r = reader_for("format\tdriftlab.normalizer\t2\ncolumns\t0\n");
    CHECK_THROWS_WITH(read_normalizer(r), Catch::Matchers::ContainsSubstring("version"));
  }
  {
    auto r = reader_for("bogus\n");
    CHECK_THROWS_AS(read_normalizer(r), Error);
  }
}

TEST_CASE("reader errors carry origin and line number", "[serialize]") {
  const std::string doc =
      "format\tdriftlab.normalizer\t1\n"
      "columns\t1\n"
      "col\tnot_a_number\t1\t0\n";
  auto r = reader_for(doc);
  try {
    read_normalizer(r);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("mem:3:") != std::string::npos);
    CHECK(e.kind() == ErrorKind::Data);
  }
}

TEST_CASE("truncated document names the missing tag", "[serialize]") {
  auto r = reader_for("format\tdriftlab.lr\t1\nc\t1\n");
  CHECK_THROWS_WITH(read_lr(r), Catch::Matchers::ContainsSubstring("penalty"));
}

TEST_CASE("weights count mismatch is rejected", "[serialize]") {
  const std::string doc =
      "format\tdriftlab.lr\t1\n"
      "c\t1\npenalty\tl1\nmax_iter\t5\ntol\t1e-07\nconverged\t1\niterations\t2\n"
      "intercept\t0\nweights\t3\t1\t2\n";
  auto r = reader_for(doc);
  CHECK_THROWS_WITH(read_lr(r), Catch::Matchers::ContainsSubstring("count mismatch"));
}

TEST_CASE("pca reader rejects inconsistent dimensions", "[serialize]") {
  const std::string doc = "format\tdriftlab.pca\t1\ndim\t2\nk\t3\n";
  auto r = reader_for(doc);
  CHECK_THROWS_WITH(read_pca(r), Catch::Matchers::ContainsSubstring("inconsistent"));
}

TEST_CASE("text file helpers round-trip and raise io errors", "[serialize]") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "driftlab_test_text.txt").string();
  write_text_file(path, "hello\nworld\n");
  CHECK(read_text_file(path) == "hello\nworld\n");
  std::filesystem::remove(path);
  try {
    read_text_file("/nonexistent/driftlab_missing.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
