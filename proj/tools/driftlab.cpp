// driftlab: benchmark how clinical time-series prediction pipelines
// degrade under temporal dataset shift, and how concept-aggregated
// representations mitigate it.
//
// Subcommands:
//   generate  synthesize the dataset files and print a summary
//   run       evaluate the configured grid, write metrics.csv/summary.csv
//   report    render SVG figures and text tables from metrics.csv
//   run-all   generate (for managed data), run, report
//
// Exit codes: 0 ok, 2 usage/config, 3 I/O, 4 data, 5 evaluation,
// 7 internal error.

#include <exception>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "driftlab/config.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/runner.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  long long seed = -1;
  int jobs = 0;
  bool quiet = false;
};

int default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void add_common(CLI::App* cmd, CommonFlags& f, bool with_jobs) {
  cmd->add_option("--config", f.config, "run configuration file (defaults apply when omitted)");
  cmd->add_option("--out", f.out, "output directory (overrides the config's out_dir)");
  cmd->add_option("--seed", f.seed, "master seed (overrides the config's seed)")
      ->check(CLI::NonNegativeNumber);
  if (with_jobs) {
    cmd->add_option("--jobs", f.jobs, "worker threads (default: machine parallelism)")
        ->check(CLI::PositiveNumber);
  }
  cmd->add_flag("--quiet", f.quiet, "suppress progress output");
}

driftlab::RunConfig load_config(const CommonFlags& f) {
  driftlab::RunConfig cfg =
      f.config.empty() ? driftlab::RunConfig{} : driftlab::load_run_config(f.config);
  if (f.config.empty()) cfg.validate();
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(f.seed);
    if (!cfg.scenario_seed_pinned) cfg.scenario.seed = cfg.seed;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "driftlab: temporal dataset shift benchmarks for clinical time-series prediction"};
  app.require_subcommand(1);

  CommonFlags gen_f, run_f, rep_f, all_f;
  CLI::App* cmd_gen = app.add_subcommand("generate", "synthesize dataset files");
  add_common(cmd_gen, gen_f, false);
  CLI::App* cmd_run_ = app.add_subcommand("run", "evaluate the configured grid");
  add_common(cmd_run_, run_f, true);
  CLI::App* cmd_rep = app.add_subcommand("report", "render figures and tables from metrics.csv");
  add_common(cmd_rep, rep_f, false);
  CLI::App* cmd_all = app.add_subcommand("run-all", "generate, run, and report");
  add_common(cmd_all, all_f, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return driftlab::kExitUsage;
  }

  try {
    if (cmd_gen->parsed()) {
      driftlab::cmd_generate(load_config(gen_f), std::cout);
    } else if (cmd_run_->parsed()) {
      const driftlab::RunConfig cfg = load_config(run_f);
      const int jobs = run_f.jobs > 0 ? run_f.jobs : default_jobs();
      driftlab::cmd_run(cfg, jobs, run_f.quiet ? nullptr : &std::cerr);
    } else if (cmd_rep->parsed()) {
      driftlab::cmd_report(load_config(rep_f), rep_f.quiet ? nullptr : &std::cout);
    } else if (cmd_all->parsed()) {
      const driftlab::RunConfig cfg = load_config(all_f);
      const int jobs = all_f.jobs > 0 ? all_f.jobs : default_jobs();
      driftlab::cmd_run_all(cfg, jobs, all_f.quiet ? nullptr : &std::cerr, std::cout);
    }
  } catch (const driftlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return driftlab::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return driftlab::kExitInternal;
  }
  return driftlab::kExitOk;
}
