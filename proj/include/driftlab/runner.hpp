#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "driftlab/config.hpp"
#include "driftlab/datagen.hpp"
#include "driftlab/evaluate.hpp"
#include "driftlab/report.hpp"
#include "driftlab/serialize.hpp"

namespace driftlab {

inline std::string resolve_data_dir(const RunConfig& cfg) {
  if (!cfg.data_dir.empty()) return cfg.data_dir;
  return (std::filesystem::path(cfg.out_dir) / "data").string();
}

inline std::string metrics_path(const RunConfig& cfg) {
  return (std::filesystem::path(cfg.out_dir) / "metrics.csv").string();
}

inline std::string summary_path(const RunConfig& cfg) {
  return (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
}

inline std::string artifacts_dir(const RunConfig& cfg) {
  return (std::filesystem::path(cfg.out_dir) / "artifacts").string();
}

// ---------------------------------------------------------------------------
// generate: synthesize the dataset files and print a summary.

inline void cmd_generate(const RunConfig& cfg, std::ostream& log) {
  const GenResult gen = generate(cfg.scenario);
  const std::string dir = resolve_data_dir(cfg);
  emit_dataset(gen, dir);

  std::map<int, int> per_year;
  int deaths = 0;
  int long_stays = 0;
  for (const auto& s : gen.stays) {
    ++per_year[s.admit_year];
    deaths += s.icu_mortality ? 1 : 0;
    long_stays += s.los_days > 3.0 ? 1 : 0;
  }
  const double n = static_cast<double>(gen.stays.size());
  log << "wrote dataset to " << dir << "\n";
  log << "stays " << gen.stays.size() << ", events " << gen.events.size() << ", items "
      << gen.items.size() << "\n";
  for (const auto& [year, count] : per_year) {
    log << "stays " << year << ": " << count << "\n";
  }
  log << "prevalence mortality: " << format_double(deaths / n) << "\n";
  log << "prevalence long_los: " << format_double(long_stays / n) << "\n";

  // Missingness per sparse representation, over the selected cohort's
  // hourly grids: 1 - observed cells / total cells.
  Dataset ds;
  ds.events = gen.events;
  ds.stays = gen.stays;
  ds.items = gen.items;
  ds.agg_map = gen.agg_map;
  ds.ontology = gen.ontology;
  const BucketedCohort cohort = prepare_cohort(ds, cfg.cohort);
  log << "cohort stays after selection: " << cohort.size() << "\n";

  std::uint64_t raw_cells = 0, agg_cells = 0, con_cells = 0;
  for (const auto& t : cohort.tensors) {
    raw_cells += static_cast<std::uint64_t>(t.observed_count());
    agg_cells += static_cast<std::uint64_t>(build_aggregate(t, cohort.agg_cols).observed_count());
    con_cells +=
        static_cast<std::uint64_t>(build_concept_span(t, cohort.concept_cols).observed_count());
  }
  const double hours = static_cast<double>(cohort.criteria.censor_hours);
  const double n_stays = static_cast<double>(cohort.size());
  auto missing = [&](std::uint64_t cells, int width) {
    return 1.0 - static_cast<double>(cells) / (n_stays * hours * static_cast<double>(width));
  };
  log << "missingness raw: " << format_double(missing(raw_cells, cohort.item_cols.space.width()))
      << "\n";
  log << "missingness aggregate: "
      << format_double(missing(agg_cells, cohort.agg_cols.space.width())) << "\n";
  log << "missingness concept_span: "
      << format_double(missing(con_cells, cohort.concept_cols.space.width())) << "\n";
  log.flush();
}

// ---------------------------------------------------------------------------
// run: evaluate the full grid and write metrics.csv / summary.csv.

// All cells of the configured grid, in deterministic merge order: sorted
// by cell name. Cell seeds depend only on the names, so neither the
// enumeration order nor the worker schedule can shift a result.
inline std::vector<CellSpec> enumerate_cells(const RunConfig& cfg, const BucketedCohort& cohort) {
  std::vector<CellSpec> cells;
  for (Task t : cfg.tasks) {
    for (Representation r : cfg.representations) {
      for (ModelFamily m : cfg.models) {
        for (RegimeKind k : cfg.regimes) {
          const RegimeSpec regime =
              make_regime(k, cohort.first_year, cohort.last_year, cfg.first_test_year,
                          cfg.fixed_window_first, cfg.fixed_window_last);
          if (k == RegimeKind::YearAgnostic) {
            cells.push_back({t, r, m, regime, -1});
          } else {
            for (int y = regime.first_test_year; y <= cohort.last_year; ++y) {
              cells.push_back({t, r, m, regime, y});
            }
          }
        }
      }
    }
  }
  std::sort(cells.begin(), cells.end(), [](const CellSpec& a, const CellSpec& b) {
    return cell_name(a) < cell_name(b);
  });
  return cells;
}

// Evaluates cells over a worker pool. Outcomes land at their cell's
// index; artifacts (when a directory is given) are written by the worker
// that produced them. The first failure, by cell order, is rethrown
// after all workers join.
inline std::vector<CellOutcome> run_cells(const BucketedCohort& cohort,
                                          const std::vector<CellSpec>& cells,
                                          const EvalSettings& settings,
                                          std::uint64_t master_seed, int jobs,
                                          const std::string& artifact_dir,
                                          std::ostream* progress) {
  if (jobs < 1) throw_config("jobs must be >= 1");
  if (!artifact_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(artifact_dir, ec);
    if (ec) throw_io("cannot create directory " + artifact_dir + ": " + ec.message());
  }

  std::vector<CellOutcome> outcomes(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        outcomes[i] = eval_cell(cohort, cells[i], settings, master_seed);
        if (!artifact_dir.empty() && outcomes[i].artifacts.present) {
          const std::string path =
              (std::filesystem::path(artifact_dir) / (cell_name(cells[i]) + ".txt")).string();
          const CellSpec& spec = cells[i];
          const std::string doc =
              to_document(outcomes[i].artifacts, [&spec](std::ostream& out, const CellArtifacts& a) {
                write_cell_artifact(out, spec, a);
              });
          write_text_file(path, doc);
        }
        if (progress != nullptr) {
          const std::size_t k = done.fetch_add(1) + 1;
          std::lock_guard<std::mutex> lock(log_mutex);
          *progress << "[" << k << "/" << cells.size() << "] " << cell_name(cells[i]);
          if (outcomes[i].ok) {
            *progress << " auroc " << format_double(outcomes[i].auroc_value);
          } else {
            *progress << " " << outcomes[i].rows.front().flag;
          }
          *progress << "\n";
          progress->flush();
        } else {
          done.fetch_add(1);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(jobs), cells.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return outcomes;
}

namespace runner_detail {

struct GroupAgg {
  bool year_agnostic = false;
  bool ya_ok = false;
  double ya_mean = 0;
  double ya_std = 0;
  int first_test_year = 0;
  std::vector<SeriesPoint> series;
};

}  // namespace runner_detail

// Builds summary rows from cell outcomes: per (task, representation,
// model, regime), the mean and sample std of per-year AUROCs plus the
// max drop; year-agnostic groups carry their fold mean/std directly.
inline std::vector<SummaryRow> summarize_outcomes(const std::vector<CellOutcome>& outcomes) {
  std::map<std::array<std::string, 4>, runner_detail::GroupAgg> groups;
  for (const auto& out : outcomes) {
    const std::array<std::string, 4> key{task_name(out.spec.task), repr_name(out.spec.repr),
                                         family_name(out.spec.family),
                                         regime_name(out.spec.regime.kind)};
    auto& g = groups[key];
    if (out.spec.regime.kind == RegimeKind::YearAgnostic) {
      g.year_agnostic = true;
      if (out.ok) {
        g.ya_ok = true;
        g.ya_mean = out.auroc_value;
        g.ya_std = out.se_value;
      }
    } else {
      g.first_test_year = out.spec.regime.first_test_year;
      if (out.ok) g.series.push_back({out.spec.test_year, out.auroc_value});
    }
  }

  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, g] : groups) {
    SummaryRow r;
    r.task = key[0];
    r.representation = key[1];
    r.model = key[2];
    r.regime = key[3];
    if (g.year_agnostic) {
      if (g.ya_ok) {
        r.average_auroc_mean = g.ya_mean;
        r.average_auroc_std = g.ya_std;
      }
    } else if (!g.series.empty()) {
      std::vector<double> aurocs;
      aurocs.reserve(g.series.size());
      for (const auto& p : g.series) aurocs.push_back(p.auroc);
      const auto [mean, sd] = mean_and_sample_std(aurocs);
      r.average_auroc_mean = mean;
      r.average_auroc_std = sd;
      r.max_drop = max_drop_from_series(g.series, g.first_test_year);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void cmd_run(const RunConfig& cfg, int jobs, std::ostream* progress) {
  const Dataset ds = load_dataset(DatasetPaths::in_dir(resolve_data_dir(cfg)));
  const BucketedCohort cohort = prepare_cohort(ds, cfg.cohort);
  const std::vector<CellSpec> cells = enumerate_cells(cfg, cohort);

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw_io("cannot create directory " + cfg.out_dir + ": " + ec.message());

  const std::vector<CellOutcome> outcomes =
      run_cells(cohort, cells, cfg.eval, cfg.seed, jobs, artifacts_dir(cfg), progress);

  std::vector<MetricsRow> rows;
  for (const auto& out : outcomes) {
    for (const auto& r : out.rows) rows.push_back(r);
  }
  write_metrics_csv(metrics_path(cfg), rows);
  write_summary_csv(summary_path(cfg), summarize_outcomes(outcomes));
}

inline void cmd_report(const RunConfig& cfg, std::ostream* log) {
  const std::vector<MetricsRow> metrics = read_metrics_csv(metrics_path(cfg));
  const ReportFiles files = render_report(metrics, cfg.scenario.switch_year, cfg.out_dir);
  if (log != nullptr) {
    for (const auto& f : files.figures) *log << "wrote " << f << "\n";
    *log << "wrote " << files.tables << "\n";
    log->flush();
  }
}

// run-all: generate (only for managed data under out_dir), run, report.
inline void cmd_run_all(const RunConfig& cfg, int jobs, std::ostream* progress,
                        std::ostream& log) {
  if (cfg.data_dir.empty()) {
    cmd_generate(cfg, log);
  }
  cmd_run(cfg, jobs, progress);
  cmd_report(cfg, progress);
}

}  // namespace driftlab
