#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftlab/cohort.hpp"
#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/flat.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/pca.hpp"
#include "driftlab/represent.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/search.hpp"
#include "driftlab/serialize.hpp"
#include "driftlab/tensor.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// ---------------------------------------------------------------------------
// Tasks, representations, regimes

enum class Task { Mortality, LongLos };

inline const char* task_name(Task t) { return t == Task::Mortality ? "mortality" : "long_los"; }

inline Task parse_task(const std::string& s) {
  if (s == "mortality") return Task::Mortality;
  if (s == "long_los") return Task::LongLos;
  throw_config("unknown task '" + s + "' (expected 'mortality' or 'long_los')");
}

// Label definitions: in-ICU mortality, and a stay exceeding three days.
inline std::uint8_t label_of(const StayMeta& s, Task t) {
  if (t == Task::Mortality) return s.icu_mortality ? 1 : 0;
  return s.los_days > 3.0 ? 1 : 0;
}

enum class Representation { Raw, Pca, ConceptSpan, Aggregate, DemographicsOnly };

inline const char* repr_name(Representation r) {
  switch (r) {
    case Representation::Raw: return "raw";
    case Representation::Pca: return "pca";
    case Representation::ConceptSpan: return "concept_span";
    case Representation::Aggregate: return "aggregate";
    case Representation::DemographicsOnly: return "demographics";
  }
  return "?";
}

inline Representation parse_representation(const std::string& s) {
  if (s == "raw") return Representation::Raw;
  if (s == "pca") return Representation::Pca;
  if (s == "concept_span") return Representation::ConceptSpan;
  if (s == "aggregate") return Representation::Aggregate;
  if (s == "demographics") return Representation::DemographicsOnly;
  throw_config("unknown representation '" + s + "'");
}

enum class RegimeKind { YearAgnostic, FixedWindow, PriorYear, FullHistory };

inline const char* regime_name(RegimeKind k) {
  switch (k) {
    case RegimeKind::YearAgnostic: return "year_agnostic";
    case RegimeKind::FixedWindow: return "fixed_window";
    case RegimeKind::PriorYear: return "prior_year";
    case RegimeKind::FullHistory: return "full_history";
  }
  return "?";
}

inline RegimeKind parse_regime(const std::string& s) {
  if (s == "year_agnostic") return RegimeKind::YearAgnostic;
  if (s == "fixed_window") return RegimeKind::FixedWindow;
  if (s == "prior_year") return RegimeKind::PriorYear;
  if (s == "full_history") return RegimeKind::FullHistory;
  throw_config("unknown regime '" + s + "'");
}

// ---------------------------------------------------------------------------
// Cohort preparation: selection, bucketing, and the static column spaces
// shared by every evaluation cell.

struct BucketedCohort {
  CohortCriteria criteria;
  std::vector<StayMeta> stays;  // cohort, sorted by stay id
  ItemColumns item_cols;
  AggregateColumns agg_cols;
  ConceptColumns concept_cols;
  DemographicEncoder demo;
  std::vector<HourlyTensor> tensors;  // aligned with stays
  int first_year = 0;
  int last_year = 0;

  std::size_t size() const { return stays.size(); }
};

inline BucketedCohort prepare_cohort(const Dataset& ds, const CohortCriteria& criteria) {
  criteria.validate();
  BucketedCohort c;
  c.criteria = criteria;
  c.stays = select_cohort(ds.stays, criteria);
  if (c.stays.empty()) throw_data("cohort selection produced no stays");
  c.item_cols = make_item_columns(ds.items);
  c.agg_cols = build_aggregate_columns(ds.agg_map, c.item_cols);
  c.concept_cols = build_concept_mapping(ds.items, c.item_cols, ds.ontology);
  c.demo = make_demographic_encoder(c.stays);

  std::unordered_map<StayId, std::size_t> pos;
  pos.reserve(c.stays.size());
  for (std::size_t i = 0; i < c.stays.size(); ++i) pos.emplace(c.stays[i].stay_id, i);
  std::vector<std::vector<ChartEvent>> per_stay(c.stays.size());
  for (const auto& e : ds.events) {
    auto it = pos.find(e.stay_id);
    if (it != pos.end()) per_stay[it->second].push_back(e);
  }
  c.tensors.reserve(c.stays.size());
  c.first_year = c.stays.front().admit_year;
  c.last_year = c.first_year;
  for (std::size_t i = 0; i < c.stays.size(); ++i) {
    c.tensors.push_back(
        bucket_hourly(per_stay[i], c.stays[i], criteria, c.item_cols.space, c.item_cols.to_col));
    per_stay[i].clear();
    per_stay[i].shrink_to_fit();
    c.first_year = std::min(c.first_year, c.stays[i].admit_year);
    c.last_year = std::max(c.last_year, c.stays[i].admit_year);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Regimes and splits

struct RegimeSpec {
  RegimeKind kind = RegimeKind::FullHistory;
  int window_first = 0;  // FixedWindow only
  int window_last = 0;
  int first_test_year = 0;
};

// Resolves defaults against the data's year range: first test year two
// years in, fixed window = the first two years.
inline RegimeSpec make_regime(RegimeKind kind, int data_first_year, int data_last_year,
                              int first_test_year = 0, int window_first = 0,
                              int window_last = 0) {
  RegimeSpec r;
  r.kind = kind;
  r.first_test_year = first_test_year > 0 ? first_test_year : data_first_year + 2;
  if (kind == RegimeKind::FixedWindow) {
    r.window_first = window_first > 0 ? window_first : data_first_year;
    r.window_last = window_last > 0 ? window_last : data_first_year + 1;
    if (r.window_last < r.window_first) {
      throw_config("fixed window: last year precedes first year");
    }
    if (r.window_last >= r.first_test_year) {
      throw_config("fixed window years must precede the first test year (window ends " +
                   std::to_string(r.window_last) + ", first test year " +
                   std::to_string(r.first_test_year) + ")");
    }
  }
  if (kind != RegimeKind::YearAgnostic && r.first_test_year > data_last_year) {
    throw_config("first test year " + std::to_string(r.first_test_year) +
                 " is past the data range ending " + std::to_string(data_last_year));
  }
  (void)data_last_year;
  return r;
}

inline std::vector<int> train_years_for(const RegimeSpec& r, int test_year,
                                        int data_first_year) {
  std::vector<int> years;
  switch (r.kind) {
    case RegimeKind::YearAgnostic:
      throw_config("year-agnostic regime has no per-year split");
    case RegimeKind::FixedWindow:
      for (int y = r.window_first; y <= r.window_last; ++y) years.push_back(y);
      break;
    case RegimeKind::PriorYear:
      years.push_back(test_year - 1);
      break;
    case RegimeKind::FullHistory:
      for (int y = data_first_year; y < test_year; ++y) years.push_back(y);
      break;
  }
  return years;
}

// Indices into BucketedCohort::stays.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline Split split_regime(const BucketedCohort& c, const RegimeSpec& r, int test_year) {
  const std::vector<int> train_years = train_years_for(r, test_year, c.first_year);
  Split s;
  for (std::size_t i = 0; i < c.stays.size(); ++i) {
    const int y = c.stays[i].admit_year;
    if (y == test_year) {
      s.test.push_back(i);
    } else if (std::find(train_years.begin(), train_years.end(), y) != train_years.end()) {
      s.train.push_back(i);
    }
  }
  if (s.train.empty()) {
    throw_eval("empty training split for test year " + std::to_string(test_year));
  }
  if (s.test.empty()) {
    throw_eval("empty test split for year " + std::to_string(test_year));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Representation fitting and featurization
//
// Model inputs are the stay's hourly grid flattened hour-major — triplet
// channels (value, mask, delta) per column for the sparse
// representations, k projection values per hour for PCA — followed by
// the demographic one-hots. Everything fitted (normalizers, PCA) sees
// training stays only.

struct ReprConfig {
  Representation repr = Representation::Raw;
  int pca_k = 0;  // 0: match the number of aggregation groups
};

struct ReprModel {
  Representation repr = Representation::Raw;
  int hours = 0;
  Normalizer item_norm;  // raw, pca, concept_span
  Normalizer out_norm;   // aggregate, concept_span
  PcaModel pca;          // pca only
  std::vector<std::string> feature_ids;
  int dim = 0;
};

namespace eval_detail {

inline void append_grid_ids(std::vector<std::string>& ids, int hours,
                            const std::vector<std::string>& cols) {
  for (int h = 0; h < hours; ++h) {
    const std::string prefix = "h" + std::to_string(h) + ":";
    for (const auto& c : cols) {
      ids.push_back(prefix + c + ":v");
      ids.push_back(prefix + c + ":m");
      ids.push_back(prefix + c + ":d");
    }
  }
}

inline void append_triplets(std::vector<float>& out, const ImputedTensor& imp) {
  for (int h = 0; h < imp.hours; ++h) {
    for (int c = 0; c < imp.width; ++c) {
      const std::size_t flat = imp.idx(h, c);
      out.push_back(static_cast<float>(imp.value[flat]));
      out.push_back(static_cast<float>(imp.mask[flat]));
      out.push_back(static_cast<float>(imp.delta[flat]));
    }
  }
}

inline void imputed_hour_row(const ImputedTensor& imp, int h, std::vector<double>& row) {
  row.resize(static_cast<std::size_t>(imp.width) * 3);
  for (int c = 0; c < imp.width; ++c) {
    const std::size_t flat = imp.idx(h, c);
    row[static_cast<std::size_t>(c) * 3 + 0] = imp.value[flat];
    row[static_cast<std::size_t>(c) * 3 + 1] = imp.mask[flat];
    row[static_cast<std::size_t>(c) * 3 + 2] = imp.delta[flat];
  }
}

}  // namespace eval_detail

inline ReprModel fit_representation(const BucketedCohort& c, const ReprConfig& cfg,
                                    const std::vector<std::size_t>& train_idx) {
  if (train_idx.empty()) throw_eval("representation fitting needs a non-empty training set");
  ReprModel m;
  m.repr = cfg.repr;
  m.hours = c.criteria.censor_hours;

  std::vector<const HourlyTensor*> train;
  train.reserve(train_idx.size());
  for (auto i : train_idx) train.push_back(&c.tensors[i]);
  const std::span<const HourlyTensor* const> train_span(train);

  std::vector<std::string> ids;
  switch (cfg.repr) {
    case Representation::Raw: {
      m.item_norm = fit_normalizer(train_span, c.item_cols.space);
      eval_detail::append_grid_ids(ids, m.hours, c.item_cols.space.ids);
      break;
    }
    case Representation::Aggregate: {
      std::vector<HourlyTensor> agg;
      agg.reserve(train.size());
      for (const HourlyTensor* t : train) agg.push_back(build_aggregate(*t, c.agg_cols));
      m.out_norm = fit_normalizer(agg, c.agg_cols.space);
      eval_detail::append_grid_ids(ids, m.hours, c.agg_cols.space.ids);
      break;
    }
    case Representation::ConceptSpan: {
      m.item_norm = fit_normalizer(train_span, c.item_cols.space);
      std::vector<HourlyTensor> ct;
      ct.reserve(train.size());
      for (const HourlyTensor* t : train) {
        ct.push_back(build_concept_span(m.item_norm.apply(*t), c.concept_cols));
      }
      m.out_norm = fit_normalizer(ct, c.concept_cols.space);
      eval_detail::append_grid_ids(ids, m.hours, c.concept_cols.space.ids);
      break;
    }
    case Representation::Pca: {
      m.item_norm = fit_normalizer(train_span, c.item_cols.space);
      const int in_dim = 3 * c.item_cols.space.width();
      const int k = cfg.pca_k > 0 ? cfg.pca_k : c.agg_cols.space.width();
      CovarianceAccumulator acc(in_dim);
      std::vector<double> row;
      for (const HourlyTensor* t : train) {
        const ImputedTensor imp = simple_impute(m.item_norm.apply(*t));
        for (int h = 0; h < imp.hours; ++h) {
          eval_detail::imputed_hour_row(imp, h, row);
          acc.add(std::span<const double>(row));
        }
      }
      m.pca = fit_pca(acc, k);
      for (int h = 0; h < m.hours; ++h) {
        for (int j = 0; j < k; ++j) {
          ids.push_back("h" + std::to_string(h) + ":pc" + std::to_string(j));
        }
      }
      break;
    }
    case Representation::DemographicsOnly:
      break;
  }
  for (const auto& id : c.demo.feature_ids()) ids.push_back(id);
  m.feature_ids = std::move(ids);
  m.dim = static_cast<int>(m.feature_ids.size());
  return m;
}

inline void featurize(const BucketedCohort& c, const ReprModel& m, std::size_t stay_idx,
                      std::vector<float>& out) {
  out.clear();
  const HourlyTensor& t = c.tensors[stay_idx];
  switch (m.repr) {
    case Representation::Raw:
      eval_detail::append_triplets(out, simple_impute(m.item_norm.apply(t)));
      break;
    case Representation::Aggregate:
      eval_detail::append_triplets(
          out, simple_impute(m.out_norm.apply(build_aggregate(t, c.agg_cols))));
      break;
    case Representation::ConceptSpan:
      eval_detail::append_triplets(
          out, simple_impute(m.out_norm.apply(
                   build_concept_span(m.item_norm.apply(t), c.concept_cols))));
      break;
    case Representation::Pca: {
      const ImputedTensor imp = simple_impute(m.item_norm.apply(t));
      std::vector<double> row;
      std::vector<double> proj(static_cast<std::size_t>(m.pca.k));
      for (int h = 0; h < imp.hours; ++h) {
        eval_detail::imputed_hour_row(imp, h, row);
        m.pca.project(std::span<const double>(row), std::span<double>(proj));
        for (double v : proj) out.push_back(static_cast<float>(v));
      }
      break;
    }
    case Representation::DemographicsOnly:
      break;
  }
  std::vector<float> demo;
  c.demo.encode(c.stays[stay_idx], demo);
  out.insert(out.end(), demo.begin(), demo.end());
}

// Builds the flat dataset for the given stays, in the given order.
inline FlatDataset make_flat(const BucketedCohort& c, const ReprModel& m, Task task,
                             const std::vector<std::size_t>& stay_idx) {
  FlatDataset d;
  d.feature_ids = m.feature_ids;
  d.dim = m.dim;
  d.reserve_rows(stay_idx.size());
  std::vector<float> row;
  for (auto i : stay_idx) {
    featurize(c, m, i, row);
    d.add_row(row, label_of(c.stays[i], task), c.stays[i].stay_id);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Result rows (the metrics.csv / summary.csv schemas)

struct MetricsRow {
  std::string task;
  std::string representation;
  std::string model;
  std::string regime;
  std::optional<int> test_year;  // empty for year-agnostic
  std::optional<double> auroc;
  std::optional<double> se;  // bootstrap standard error (fold std for year-agnostic)
  int n_train = 0;
  int n_test = 0;
  std::string subgroup;        // attribute name, empty for the overall row
  std::string subgroup_value;  // attribute value, empty for the overall row
  std::string flag;            // "", "unstable", or "skipped: <reason>"
};

struct SummaryRow {
  std::string task;
  std::string representation;
  std::string model;
  std::string regime;
  std::optional<double> average_auroc_mean;
  std::optional<double> average_auroc_std;
  std::optional<double> max_drop;
};

inline const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> h = {"task",    "representation", "model",
                                             "regime",  "test_year",      "auroc",
                                             "stderr",  "n_train",        "n_test",
                                             "subgroup", "subgroup_value", "flag"};
  return h;
}

inline const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h = {
      "task",   "representation",    "model",
      "regime", "average_auroc_mean", "average_auroc_std",
      "max_drop"};
  return h;
}

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  CsvWriter w(path);
  w.write_row(metrics_header());
  auto opt_int = [](const std::optional<int>& v) {
    return v ? format_int(*v) : std::string();
  };
  auto opt_dbl = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& r : rows) {
    w.write_row({r.task, r.representation, r.model, r.regime, opt_int(r.test_year),
                 opt_dbl(r.auroc), opt_dbl(r.se), format_int(r.n_train), format_int(r.n_test),
                 r.subgroup, r.subgroup_value, r.flag});
  }
  w.close();
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::vector<MetricsRow> rows;
  read_csv(path, metrics_header(), [&](std::size_t line, const std::vector<std::string>& f) {
    MetricsRow r;
    r.task = f[0];
    r.representation = f[1];
    r.model = f[2];
    r.regime = f[3];
    if (!f[4].empty()) r.test_year = static_cast<int>(parse_int_field(f[4], path, line, 5));
    if (!f[5].empty()) r.auroc = parse_double_field(f[5], path, line, 6);
    if (!f[6].empty()) r.se = parse_double_field(f[6], path, line, 7);
    r.n_train = static_cast<int>(parse_int_field(f[7], path, line, 8));
    r.n_test = static_cast<int>(parse_int_field(f[8], path, line, 9));
    r.subgroup = f[9];
    r.subgroup_value = f[10];
    r.flag = f[11];
    if (r.auroc && (*r.auroc < 0.0 || *r.auroc > 1.0)) {
      throw_data(path + ":" + std::to_string(line) + ": auroc outside [0,1]");
    }
    rows.push_back(std::move(r));
  });
  return rows;
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  CsvWriter w(path);
  w.write_row(summary_header());
  auto opt_dbl = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& r : rows) {
    w.write_row({r.task, r.representation, r.model, r.regime, opt_dbl(r.average_auroc_mean),
                 opt_dbl(r.average_auroc_std), opt_dbl(r.max_drop)});
  }
  w.close();
}

inline std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::vector<SummaryRow> rows;
  read_csv(path, summary_header(), [&](std::size_t line, const std::vector<std::string>& f) {
    SummaryRow r;
    r.task = f[0];
    r.representation = f[1];
    r.model = f[2];
    r.regime = f[3];
    if (!f[4].empty()) r.average_auroc_mean = parse_double_field(f[4], path, line, 5);
    if (!f[5].empty()) r.average_auroc_std = parse_double_field(f[5], path, line, 6);
    if (!f[6].empty()) r.max_drop = parse_double_field(f[6], path, line, 7);
    rows.push_back(std::move(r));
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Evaluation cells

struct EvalSettings {
  SearchSpec search;  // family is overridden per cell
  int n_boot = 200;
  int subgroup_floor = 30;
  std::vector<std::string> subgroup_attrs;  // subset of gender/ethnicity/insurance
  int pca_k = 0;

  void validate() const {
    search.validate();
    if (n_boot < 1) throw_config("eval: n_boot must be >= 1");
    if (subgroup_floor < 1) throw_config("eval: subgroup_floor must be >= 1");
    for (const auto& a : subgroup_attrs) {
      if (a != "gender" && a != "ethnicity" && a != "insurance") {
        throw_config("unknown subgroup attribute '" + a + "'");
      }
    }
  }
};

struct CellSpec {
  Task task = Task::Mortality;
  Representation repr = Representation::Raw;
  ModelFamily family = ModelFamily::Lr;
  RegimeSpec regime;
  int test_year = -1;  // -1 for year-agnostic
};

inline std::string cell_name(const CellSpec& s) {
  std::string n = std::string(task_name(s.task)) + "_" + repr_name(s.repr) + "_" +
                  family_name(s.family) + "_" + regime_name(s.regime.kind) + "_";
  n += s.test_year >= 0 ? std::to_string(s.test_year) : std::string("all");
  return n;
}

// Per-cell seeds derive from the master seed and the cell's name alone,
// so scheduling and cell-list composition never shift a cell's stream.
inline std::uint64_t cell_seed(std::uint64_t master_seed, const CellSpec& s) {
  return mix_seed(master_seed, fnv1a64(cell_name(s)));
}

struct CellArtifacts {
  bool present = false;
  ReprModel repr;
  ModelConfig best_config;
  TrainedModel model;
};

struct CellOutcome {
  CellSpec spec;
  bool ok = false;
  double auroc_value = 0;  // year-agnostic: mean over fold evaluations
  double se_value = 0;     // year-agnostic: std over fold evaluations
  std::vector<MetricsRow> rows;
  CellArtifacts artifacts;
};

namespace eval_detail {

inline const std::string& attr_value(const StayMeta& s, const std::string& attr) {
  if (attr == "gender") return s.gender;
  if (attr == "ethnicity") return s.ethnicity;
  if (attr == "insurance") return s.insurance;
  throw_config("unknown subgroup attribute '" + attr + "'");
}

inline MetricsRow base_row(const CellSpec& spec) {
  MetricsRow r;
  r.task = task_name(spec.task);
  r.representation = repr_name(spec.repr);
  r.model = family_name(spec.family);
  r.regime = regime_name(spec.regime.kind);
  if (spec.test_year >= 0) r.test_year = spec.test_year;
  return r;
}

inline void eval_temporal_cell(const BucketedCohort& c, const CellSpec& spec,
                               const EvalSettings& settings, std::uint64_t seed,
                               CellOutcome& out) {
  const Split split = split_regime(c, spec.regime, spec.test_year);
  const ReprConfig rcfg{spec.repr, settings.pca_k};
  const ReprModel rm = fit_representation(c, rcfg, split.train);

  std::vector<std::size_t> order = split.train;
  order.insert(order.end(), split.test.begin(), split.test.end());
  const FlatDataset flat = make_flat(c, rm, spec.task, order);

  RowIndices train_rows(split.train.size());
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    train_rows[i] = static_cast<std::uint32_t>(i);
  }
  RowIndices test_rows(split.test.size());
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    test_rows[i] = static_cast<std::uint32_t>(split.train.size() + i);
  }

  SearchSpec sspec = settings.search;
  sspec.family = spec.family;
  sspec.seed = seed;
  const SearchResult sr = random_search(flat, train_rows, sspec);

  const std::vector<double> scores = predict_model(sr.model, flat, test_rows);
  std::vector<std::uint8_t> y(test_rows.size());
  for (std::size_t i = 0; i < test_rows.size(); ++i) y[i] = flat.y[test_rows[i]];

  MetricsRow row = base_row(spec);
  row.n_train = static_cast<int>(split.train.size());
  row.n_test = static_cast<int>(split.test.size());
  row.auroc = auroc(scores, y);
  row.se = auroc_stderr(scores, y, mix_seed(seed, fnv1a64("boot")), settings.n_boot);
  out.rows.push_back(row);
  out.ok = true;
  out.auroc_value = *row.auroc;
  out.se_value = *row.se;
  out.artifacts.present = true;
  out.artifacts.repr = rm;
  out.artifacts.best_config = sr.best_config;
  out.artifacts.model = sr.model;

  // Subgroup sensitivity: the globally trained model evaluated per group.
  for (const auto& attr : settings.subgroup_attrs) {
    std::map<std::string, std::vector<std::size_t>> groups;  // value -> positions in test
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      groups[attr_value(c.stays[split.test[i]], attr)].push_back(i);
    }
    for (const auto& [value, members] : groups) {
      MetricsRow g = base_row(spec);
      g.subgroup = attr;
      g.subgroup_value = value;
      g.n_train = row.n_train;
      g.n_test = static_cast<int>(members.size());
      std::vector<double> gs;
      std::vector<std::uint8_t> gy;
      gs.reserve(members.size());
      gy.reserve(members.size());
      std::size_t pos = 0;
      for (auto i : members) {
        gs.push_back(scores[i]);
        gy.push_back(y[i]);
        pos += y[i];
      }
      if (static_cast<int>(members.size()) < settings.subgroup_floor || pos == 0 ||
          pos == members.size()) {
        g.flag = "unstable";
      } else {
        g.auroc = auroc(gs, gy);
        g.se = auroc_stderr(gs, gy, mix_seed(seed, fnv1a64("boot:" + attr + "=" + value)),
                            settings.n_boot);
      }
      out.rows.push_back(std::move(g));
    }
  }
}

inline void eval_year_agnostic_cell(const BucketedCohort& c, const CellSpec& spec,
                                    const EvalSettings& settings, std::uint64_t seed,
                                    CellOutcome& out) {
  std::vector<std::uint8_t> labels(c.stays.size());
  for (std::size_t i = 0; i < c.stays.size(); ++i) labels[i] = label_of(c.stays[i], spec.task);

  const ReprConfig rcfg{spec.repr, settings.pca_k};
  std::vector<double> fold_aurocs;
  fold_aurocs.reserve(10);
  for (int rep = 0; rep < 5; ++rep) {
    const auto folds =
        stratified_folds(labels, 2, mix_seed(seed, static_cast<std::uint64_t>(rep)));
    for (int f = 0; f < 2; ++f) {
      std::vector<std::size_t> train_idx, test_idx;
      for (auto i : folds[static_cast<std::size_t>(1 - f)]) train_idx.push_back(i);
      for (auto i : folds[static_cast<std::size_t>(f)]) test_idx.push_back(i);

      const ReprModel rm = fit_representation(c, rcfg, train_idx);
      std::vector<std::size_t> order = train_idx;
      order.insert(order.end(), test_idx.begin(), test_idx.end());
      const FlatDataset flat = make_flat(c, rm, spec.task, order);

      RowIndices train_rows(train_idx.size());
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        train_rows[i] = static_cast<std::uint32_t>(i);
      }
      RowIndices test_rows(test_idx.size());
      for (std::size_t i = 0; i < test_rows.size(); ++i) {
        test_rows[i] = static_cast<std::uint32_t>(train_idx.size() + i);
      }

      SearchSpec sspec = settings.search;
      sspec.family = spec.family;
      sspec.seed = mix_seed(mix_seed(seed, fnv1a64("fold")),
                            static_cast<std::uint64_t>(rep * 2 + f));
      const SearchResult sr = random_search(flat, train_rows, sspec);
      const std::vector<double> scores = predict_model(sr.model, flat, test_rows);
      std::vector<std::uint8_t> y(test_rows.size());
      for (std::size_t i = 0; i < test_rows.size(); ++i) y[i] = flat.y[test_rows[i]];
      fold_aurocs.push_back(auroc(scores, y));
    }
  }

  double mean = 0;
  for (double a : fold_aurocs) mean += a;
  mean /= static_cast<double>(fold_aurocs.size());
  double var = 0;
  for (double a : fold_aurocs) var += (a - mean) * (a - mean);
  var /= static_cast<double>(fold_aurocs.size() - 1);  // sample std over 10 folds

  MetricsRow row = base_row(spec);
  row.n_train = static_cast<int>(c.stays.size() / 2);
  row.n_test = static_cast<int>(c.stays.size() - c.stays.size() / 2);
  row.auroc = mean;
  row.se = std::sqrt(var);
  out.rows.push_back(row);
  out.ok = true;
  out.auroc_value = mean;
  out.se_value = std::sqrt(var);
}

}  // namespace eval_detail

// Evaluates one grid cell. Data and evaluation failures (empty splits,
// degenerate labels) are recorded as a skip row rather than thrown, so a
// grid run continues past bad cells; configuration and I/O errors
// propagate.
inline CellOutcome eval_cell(const BucketedCohort& c, const CellSpec& spec,
                             const EvalSettings& settings, std::uint64_t master_seed) {
  settings.validate();
  CellOutcome out;
  out.spec = spec;
  const std::uint64_t seed = cell_seed(master_seed, spec);
  try {
    if (spec.regime.kind == RegimeKind::YearAgnostic) {
      eval_detail::eval_year_agnostic_cell(c, spec, settings, seed, out);
    } else {
      eval_detail::eval_temporal_cell(c, spec, settings, seed, out);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Io) throw;
    MetricsRow row = eval_detail::base_row(spec);
    row.flag = std::string("skipped: ") + e.what();
    out.rows.clear();
    out.rows.push_back(std::move(row));
    out.ok = false;
    out.artifacts.present = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report assembly helpers

struct SeriesPoint {
  int test_year = 0;
  double auroc = 0;
};

// Max drop: AUROC of the first test year minus the minimum over
// subsequent years; absent when the first test year is missing or there
// is no subsequent year. Negative values are improvements.
inline std::optional<double> max_drop_from_series(std::vector<SeriesPoint> pts,
                                                  int first_test_year) {
  std::sort(pts.begin(), pts.end(),
            [](const SeriesPoint& a, const SeriesPoint& b) { return a.test_year < b.test_year; });
  if (pts.empty() || pts.front().test_year != first_test_year || pts.size() < 2) {
    return std::nullopt;
  }
  double min_later = pts[1].auroc;
  for (std::size_t i = 2; i < pts.size(); ++i) min_later = std::min(min_later, pts[i].auroc);
  return pts.front().auroc - min_later;
}

inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// Whole-regime reports (serial convenience wrappers over eval_cell)

struct EvalReport {
  std::string task;
  std::string representation;
  std::string model;
  std::string regime;
  std::vector<MetricsRow> rows;
  std::optional<double> average_auroc_mean;
  std::optional<double> average_auroc_std;
  std::optional<double> max_drop;
};

inline EvalReport eval_temporal(const BucketedCohort& c, Task task, Representation repr,
                                ModelFamily family, const RegimeSpec& regime,
                                const EvalSettings& settings, std::uint64_t master_seed) {
  if (regime.kind == RegimeKind::YearAgnostic) {
    throw_config("eval_temporal: regime must be temporal");
  }
  EvalReport rep;
  rep.task = task_name(task);
  rep.representation = repr_name(repr);
  rep.model = family_name(family);
  rep.regime = regime_name(regime.kind);
  std::vector<SeriesPoint> series;
  std::vector<double> aurocs;
  for (int y = regime.first_test_year; y <= c.last_year; ++y) {
    CellSpec spec{task, repr, family, regime, y};
    CellOutcome out = eval_cell(c, spec, settings, master_seed);
    for (auto& r : out.rows) rep.rows.push_back(std::move(r));
    if (out.ok) {
      series.push_back({y, out.auroc_value});
      aurocs.push_back(out.auroc_value);
    }
  }
  if (!aurocs.empty()) {
    auto [mean, sd] = mean_and_sample_std(aurocs);
    rep.average_auroc_mean = mean;
    rep.average_auroc_std = sd;
  }
  rep.max_drop = max_drop_from_series(series, regime.first_test_year);
  return rep;
}

inline EvalReport eval_year_agnostic(const BucketedCohort& c, Task task, Representation repr,
                                     ModelFamily family, const EvalSettings& settings,
                                     std::uint64_t master_seed) {
  RegimeSpec regime = make_regime(RegimeKind::YearAgnostic, c.first_year, c.last_year);
  CellSpec spec{task, repr, family, regime, -1};
  CellOutcome out = eval_cell(c, spec, settings, master_seed);
  EvalReport rep;
  rep.task = task_name(task);
  rep.representation = repr_name(repr);
  rep.model = family_name(family);
  rep.regime = regime_name(RegimeKind::YearAgnostic);
  rep.rows = out.rows;
  if (out.ok) {
    rep.average_auroc_mean = out.auroc_value;
    rep.average_auroc_std = out.se_value;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Cell artifact document: everything fitted on the training side of one
// temporal cell, serialized for exact reuse and leakage auditing.

inline void write_cell_artifact(std::ostream& out, const CellSpec& spec,
                                const CellArtifacts& a) {
  out << "format\tdriftlab.cell\t1\n";
  out << "cell\t" << cell_name(spec) << '\n';
  out << "representation\t" << repr_name(a.repr.repr) << '\n';
  out << "hours\t" << a.repr.hours << '\n';
  out << "dim\t" << a.repr.dim << '\n';
  const bool has_item_norm = a.repr.repr == Representation::Raw ||
                             a.repr.repr == Representation::Pca ||
                             a.repr.repr == Representation::ConceptSpan;
  const bool has_out_norm = a.repr.repr == Representation::Aggregate ||
                            a.repr.repr == Representation::ConceptSpan;
  if (has_item_norm) {
    out << "section\titem_normalizer\n";
    write_normalizer(out, a.repr.item_norm);
  }
  if (has_out_norm) {
    out << "section\toutput_normalizer\n";
    write_normalizer(out, a.repr.out_norm);
  }
  if (a.repr.repr == Representation::Pca) {
    out << "section\tpca\n";
    write_pca(out, a.repr.pca);
  }
  out << "section\tmodel\n";
  write_trained_model(out, a.model);
}

struct CellArtifactDoc {
  std::string cell;
  Representation repr = Representation::Raw;
  int hours = 0;
  int dim = 0;
  Normalizer item_norm;
  Normalizer out_norm;
  PcaModel pca;
  TrainedModel model;
};

inline CellArtifactDoc read_cell_artifact(ser_detail::DocReader& r) {
  ser_detail::expect_format(r, "driftlab.cell");
  CellArtifactDoc doc;
  doc.cell = r.expect("cell", 2)[1];
  doc.repr = parse_representation(r.expect("representation", 2)[1]);
  doc.hours = static_cast<int>(r.as_int(r.expect("hours", 2)[1]));
  doc.dim = static_cast<int>(r.as_int(r.expect("dim", 2)[1]));
  const bool has_item_norm = doc.repr == Representation::Raw ||
                             doc.repr == Representation::Pca ||
                             doc.repr == Representation::ConceptSpan;
  const bool has_out_norm =
      doc.repr == Representation::Aggregate || doc.repr == Representation::ConceptSpan;
  if (has_item_norm) {
    if (r.expect("section", 2)[1] != "item_normalizer") r.fail("expected item_normalizer");
    doc.item_norm = read_normalizer(r);
  }
  if (has_out_norm) {
    if (r.expect("section", 2)[1] != "output_normalizer") r.fail("expected output_normalizer");
    doc.out_norm = read_normalizer(r);
  }
  if (doc.repr == Representation::Pca) {
    if (r.expect("section", 2)[1] != "pca") r.fail("expected pca section");
    doc.pca = read_pca(r);
  }
  if (r.expect("section", 2)[1] != "model") r.fail("expected model section");
  doc.model = read_trained_model(r);
  return doc;
}

}  // namespace driftlab
