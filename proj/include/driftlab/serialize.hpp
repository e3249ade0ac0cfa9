#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/forest.hpp"
#include "driftlab/logistic.hpp"
#include "driftlab/pca.hpp"
#include "driftlab/represent.hpp"
#include "driftlab/search.hpp"

namespace driftlab {

// Versioned delimited-text serialization for fitted artifacts. Every
// document starts with "format <name> <version>"; fields are
// tab-separated; doubles use shortest round-trip formatting so a
// write/read cycle reproduces scores exactly.

namespace ser_detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Line-oriented reader with positional error messages.
class DocReader {
 public:
  DocReader(std::string text, std::string origin)
      : text_(std::move(text)), origin_(std::move(origin)) {}

  bool next(std::vector<std::string>& fields) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    std::string line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_no_;
    fields = split_tabs(line);
    return true;
  }

  std::vector<std::string> expect(const std::string& tag, std::size_t n_fields) {
    std::vector<std::string> fields;
    if (!next(fields)) {
      throw_data(origin_ + ": unexpected end of document, expected '" + tag + "'");
    }
    if (fields.empty() || fields[0] != tag) {
      fail("expected '" + tag + "', got '" + (fields.empty() ? "" : fields[0]) + "'");
    }
    if (n_fields != 0 && fields.size() != n_fields) {
      fail("'" + tag + "' expects " + std::to_string(n_fields - 1) + " fields, got " +
           std::to_string(fields.size() - 1));
    }
    return fields;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw_data(origin_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  double as_double(const std::string& s) const {
    try {
      return parse_double(s);
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  long long as_int(const std::string& s) const {
    try {
      return parse_int(s);
    } catch (const Error& e) {
      fail(e.what());
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string text_;
  std::string origin_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

inline void expect_format(DocReader& r, const std::string& name) {
  const auto f = r.expect("format", 3);
  if (f[1] != name) r.fail("document is '" + f[1] + "', expected '" + name + "'");
  if (f[2] != "1") r.fail("unsupported version '" + f[2] + "' of '" + name + "'");
}

inline std::string fmt(double v) { return format_double(v); }
inline std::string fmt(int v) { return format_int(v); }
inline std::string fmt(long long v) { return format_int(v); }
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

}  // namespace ser_detail

// ---- Normalizer ----

inline void write_normalizer(std::ostream& out, const Normalizer& n) {
  using ser_detail::fmt;
  out << "format\tdriftlab.normalizer\t1\n";
  out << "columns\t" << n.columns.size() << '\n';
  for (std::size_t i = 0; i < n.columns.size(); ++i) {
    out << n.columns[i] << '\t' << fmt(n.mean[i]) << '\t' << fmt(n.stddev[i]) << '\t'
        << (n.floored[i] ? 1 : 0) << '\n';
  }
}

inline Normalizer read_normalizer(ser_detail::DocReader& r) {
  ser_detail::expect_format(r, "driftlab.normalizer");
  const auto head = r.expect("columns", 2);
  const long long n = r.as_int(head[1]);
  if (n < 0) r.fail("negative column count");
  Normalizer norm;
  for (long long i = 0; i < n; ++i) {
    std::vector<std::string> f;
    if (!r.next(f) || f.size() != 4) r.fail("expected a 4-field column line");
    norm.columns.push_back(f[0]);
    norm.mean.push_back(r.as_double(f[1]));
    norm.stddev.push_back(r.as_double(f[2]));
    norm.floored.push_back(f[3] == "1" ? 1 : 0);
  }
  return norm;
}

// ---- PCA ----

inline void write_pca(std::ostream& out, const PcaModel& m) {
  using ser_detail::fmt;
  out << "format\tdriftlab.pca\t1\n";
  out << "dim\t" << m.dim << "\nk\t" << m.k << '\n';
  out << "mean";
  for (double v : m.mean) out << '\t' << fmt(v);
  out << "\nvariance";
  for (double v : m.explained_variance) out << '\t' << fmt(v);
  out << '\n';
  for (int c = 0; c < m.k; ++c) {
    out << "component\t" << c;
    for (int j = 0; j < m.dim; ++j) {
      out << '\t' << fmt(m.components[static_cast<std::size_t>(c) * m.dim + j]);
    }
    out << '\n';
  }
}

inline PcaModel read_pca(ser_detail::DocReader& r) {
  ser_detail::expect_format(r, "driftlab.pca");
  PcaModel m;
  m.dim = static_cast<int>(r.as_int(r.expect("dim", 2)[1]));
  m.k = static_cast<int>(r.as_int(r.expect("k", 2)[1]));
  if (m.dim < 1 || m.k < 0 || m.k > m.dim) r.fail("inconsistent pca dimensions");
  auto mean = r.expect("mean", static_cast<std::size_t>(m.dim) + 1);
  for (int j = 0; j < m.dim; ++j) m.mean.push_back(r.as_double(mean[static_cast<std::size_t>(j) + 1]));
  auto var = r.expect("variance", static_cast<std::size_t>(m.k) + 1);
  for (int c = 0; c < m.k; ++c) {
    m.explained_variance.push_back(r.as_double(var[static_cast<std::size_t>(c) + 1]));
  }
  m.components.resize(static_cast<std::size_t>(m.k) * static_cast<std::size_t>(m.dim));
  for (int c = 0; c < m.k; ++c) {
    auto comp = r.expect("component", static_cast<std::size_t>(m.dim) + 2);
    if (r.as_int(comp[1]) != c) r.fail("component rows out of order");
    for (int j = 0; j < m.dim; ++j) {
      m.components[static_cast<std::size_t>(c) * m.dim + j] =
          r.as_double(comp[static_cast<std::size_t>(j) + 2]);
    }
  }
  return m;
}

// ---- Logistic regression ----

inline void write_lr(std::ostream& out, const LrModel& m) {
  using ser_detail::fmt;
  out << "format\tdriftlab.lr\t1\n";
  out << "c\t" << fmt(m.config.c) << '\n';
  out << "penalty\t" << (m.config.penalty == Penalty::L1 ? "l1" : "l2") << '\n';
  out << "max_iter\t" << m.config.max_iter << '\n';
  out << "tol\t" << fmt(m.config.tol) << '\n';
  out << "converged\t" << (m.converged ? 1 : 0) << '\n';
  out << "iterations\t" << m.iterations << '\n';
  out << "intercept\t" << fmt(m.intercept) << '\n';
  out << "weights\t" << m.weights.size();
  for (double w : m.weights) out << '\t' << fmt(w);
  out << '\n';
}

inline LrModel read_lr(ser_detail::DocReader& r) {
  ser_detail::expect_format(r, "driftlab.lr");
  LrModel m;
  m.config.c = r.as_double(r.expect("c", 2)[1]);
  const std::string pen = r.expect("penalty", 2)[1];
  if (pen == "l1") {
    m.config.penalty = Penalty::L1;
  } else if (pen == "l2") {
    m.config.penalty = Penalty::L2;
  } else {
    r.fail("unknown penalty '" + pen + "'");
  }
  m.config.max_iter = static_cast<int>(r.as_int(r.expect("max_iter", 2)[1]));
  m.config.tol = r.as_double(r.expect("tol", 2)[1]);
  m.converged = r.as_int(r.expect("converged", 2)[1]) != 0;
  m.iterations = static_cast<int>(r.as_int(r.expect("iterations", 2)[1]));
  m.intercept = r.as_double(r.expect("intercept", 2)[1]);
  auto w = r.expect("weights", 0);
  if (w.size() < 2) r.fail("weights line missing count");
  const long long n = r.as_int(w[1]);
  if (n < 0 || w.size() != static_cast<std::size_t>(n) + 2) r.fail("weights count mismatch");
  for (long long j = 0; j < n; ++j) m.weights.push_back(r.as_double(w[static_cast<std::size_t>(j) + 2]));
  return m;
}

// ---- Random forest ----

inline void write_rf(std::ostream& out, const RfModel& m) {
  using ser_detail::fmt;
  out << "format\tdriftlab.rf\t1\n";
  out << "n_estimators\t" << m.config.n_estimators << '\n';
  out << "max_depth\t" << m.config.max_depth << '\n';
  out << "min_samples_split\t" << m.config.min_samples_split << '\n';
  out << "min_samples_leaf\t" << m.config.min_samples_leaf << '\n';
  out << "feature_fraction\t" << fmt(m.config.feature_fraction) << '\n';
  out << "seed\t" << m.config.seed << '\n';
  out << "dim\t" << m.dim << '\n';
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    out << "tree\t" << t << '\t' << m.trees[t].nodes.size() << '\n';
    for (const TreeNode& nd : m.trees[t].nodes) {
      out << "node\t" << nd.feature << '\t' << fmt(nd.threshold) << '\t' << nd.left << '\t'
          << nd.right << '\t' << fmt(nd.value) << '\t' << nd.count << '\n';
    }
  }
}

inline RfModel read_rf(ser_detail::DocReader& r) {
  ser_detail::expect_format(r, "driftlab.rf");
  RfModel m;
  m.config.n_estimators = static_cast<int>(r.as_int(r.expect("n_estimators", 2)[1]));
  m.config.max_depth = static_cast<int>(r.as_int(r.expect("max_depth", 2)[1]));
  m.config.min_samples_split = static_cast<int>(r.as_int(r.expect("min_samples_split", 2)[1]));
  m.config.min_samples_leaf = static_cast<int>(r.as_int(r.expect("min_samples_leaf", 2)[1]));
  m.config.feature_fraction = r.as_double(r.expect("feature_fraction", 2)[1]);
  m.config.seed = static_cast<std::uint64_t>(r.as_int(r.expect("seed", 2)[1]));
  m.dim = static_cast<int>(r.as_int(r.expect("dim", 2)[1]));
  for (int t = 0; t < m.config.n_estimators; ++t) {
    auto th = r.expect("tree", 3);
    if (r.as_int(th[1]) != t) r.fail("tree rows out of order");
    const long long n_nodes = r.as_int(th[2]);
    Tree tree;
    for (long long i = 0; i < n_nodes; ++i) {
      auto f = r.expect("node", 7);
      TreeNode nd;
      nd.feature = static_cast<int>(r.as_int(f[1]));
      nd.threshold = r.as_double(f[2]);
      nd.left = static_cast<int>(r.as_int(f[3]));
      nd.right = static_cast<int>(r.as_int(f[4]));
      nd.value = r.as_double(f[5]);
      nd.count = static_cast<int>(r.as_int(f[6]));
      tree.nodes.push_back(nd);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

// ---- Model wrapper ----

inline void write_trained_model(std::ostream& out, const TrainedModel& m) {
  out << "format\tdriftlab.model\t1\n";
  out << "family\t" << family_name(m.family) << '\n';
  if (m.family == ModelFamily::Lr) {
    write_lr(out, m.lr);
  } else {
    write_rf(out, m.rf);
  }
}

inline TrainedModel read_trained_model(ser_detail::DocReader& r) {
  ser_detail::expect_format(r, "driftlab.model");
  TrainedModel m;
  m.family = parse_family(r.expect("family", 2)[1]);
  if (m.family == ModelFamily::Lr) {
    m.lr = read_lr(r);
  } else {
    m.rf = read_rf(r);
  }
  return m;
}

// ---- File helpers ----

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw_io("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw_io("failed reading '" + path + "'");
  return buf.str();
}

inline ser_detail::DocReader open_document(const std::string& path) {
  return ser_detail::DocReader(read_text_file(path), path);
}

template <typename T, typename WriteFn>
inline std::string to_document(const T& value, WriteFn fn) {
  std::ostringstream out;
  fn(out, value);
  return out.str();
}

}  // namespace driftlab
