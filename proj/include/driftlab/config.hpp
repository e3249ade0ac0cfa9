#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/cohort.hpp"
#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/evaluate.hpp"
#include "driftlab/scenario.hpp"
#include "driftlab/search.hpp"
#include "driftlab/serialize.hpp"

namespace driftlab {

// Run configuration: one structured text file, `key = value` per line,
// `#` comments, dotted keys for nested sections. Unknown and duplicate
// keys are hard errors.
struct RunConfig {
  std::string out_dir = "out";
  std::string data_dir;  // empty: generate under <out_dir>/data
  std::uint64_t seed = 198904;

  std::vector<Task> tasks{Task::Mortality, Task::LongLos};
  std::vector<Representation> representations{Representation::Raw, Representation::Aggregate};
  std::vector<ModelFamily> models{ModelFamily::Lr, ModelFamily::Rf};
  std::vector<RegimeKind> regimes{RegimeKind::FullHistory};

  int first_test_year = 0;    // 0: two years past the data's first year
  int fixed_window_first = 0;  // 0: the data's first year
  int fixed_window_last = 0;   // 0: the data's second year

  DriftScenario scenario;
  CohortCriteria cohort;
  EvalSettings eval;

  // True when the config named scenario.seed explicitly; a --seed
  // override then leaves the scenario's stream alone.
  bool scenario_seed_pinned = false;

  void validate() const {
    if (out_dir.empty()) throw_config("out_dir must not be empty");
    if (tasks.empty()) throw_config("tasks list must not be empty");
    if (representations.empty()) throw_config("representations list must not be empty");
    if (models.empty()) throw_config("models list must not be empty");
    if (regimes.empty()) throw_config("regimes list must not be empty");
    for (Representation r : representations) {
      if (r == Representation::DemographicsOnly) {
        throw_config(
            "representation 'demographics' is library-only; configs accept raw, pca, "
            "concept_span, aggregate");
      }
    }
    auto no_dups = [](const auto& list, const char* what) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        for (std::size_t j = i + 1; j < list.size(); ++j) {
          if (list[i] == list[j]) throw_config(std::string(what) + " list has duplicates");
        }
      }
    };
    no_dups(tasks, "tasks");
    no_dups(representations, "representations");
    no_dups(models, "models");
    no_dups(regimes, "regimes");
    no_dups(eval.subgroup_attrs, "subgroups");
    scenario.validate();
    cohort.validate();
    eval.validate();
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_list(const std::string& value, char sep,
                                           const std::string& where) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t pos = value.find(sep, start);
    const std::string part =
        trim(std::string_view(value).substr(start, (pos == std::string::npos ? value.size() : pos) - start));
    if (part.empty()) throw_config(where + ": empty list element");
    out.push_back(part);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw_config(where + ": empty list");
  return out;
}

struct LineContext {
  const std::string& origin;
  std::size_t line;
  std::string where() const { return origin + ":" + std::to_string(line); }
  [[noreturn]] void fail(const std::string& msg) const { throw_config(where() + ": " + msg); }

  double as_double(const std::string& v) const {
    try {
      return parse_double(v);
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  long long as_int(const std::string& v) const {
    try {
      return parse_int(v);
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  bool as_bool(const std::string& v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("expected 'true' or 'false', got '" + v + "'");
  }
  std::uint64_t as_seed(const std::string& v) const {
    const long long s = as_int(v);
    if (s < 0) fail("seed must be non-negative");
    return static_cast<std::uint64_t>(s);
  }
};

// "group:year:rate; group:year:rate; ..."
template <class Shift>
inline std::vector<Shift> parse_shifts(const std::string& value, const LineContext& ctx) {
  std::vector<Shift> out;
  for (const auto& part : split_list(value, ';', ctx.where())) {
    const auto fields = split_list(part, ':', ctx.where());
    if (fields.size() != 3) ctx.fail("expected group:year:value, got '" + part + "'");
    Shift s;
    s.group = static_cast<int>(ctx.as_int(fields[0]));
    s.year = static_cast<int>(ctx.as_int(fields[1]));
    if constexpr (requires(Shift x) { x.rate; }) {
      s.rate = ctx.as_double(fields[2]);
    } else {
      s.offset = ctx.as_double(fields[2]);
    }
    out.push_back(s);
  }
  return out;
}

// "name:weight, name:weight, ..."
inline std::vector<std::pair<std::string, double>> parse_mixture(const std::string& value,
                                                                 const LineContext& ctx) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& part : split_list(value, ',', ctx.where())) {
    const std::size_t pos = part.find(':');
    if (pos == std::string::npos) ctx.fail("expected name:weight, got '" + part + "'");
    const std::string name = trim(std::string_view(part).substr(0, pos));
    if (name.empty()) ctx.fail("empty mixture category in '" + part + "'");
    out.emplace_back(name, ctx.as_double(trim(std::string_view(part).substr(pos + 1))));
  }
  return out;
}

inline void apply_key(RunConfig& cfg, const std::string& key, const std::string& value,
                      const LineContext& ctx, bool& scenario_seed_set) {
  auto as_int = [&](const std::string& v) { return static_cast<int>(ctx.as_int(v)); };

  if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "data_dir") {
    cfg.data_dir = value;
  } else if (key == "seed") {
    cfg.seed = ctx.as_seed(value);
  } else if (key == "tasks") {
    cfg.tasks.clear();
    for (const auto& t : split_list(value, ',', ctx.where())) cfg.tasks.push_back(parse_task(t));
  } else if (key == "representations") {
    cfg.representations.clear();
    for (const auto& r : split_list(value, ',', ctx.where())) {
      cfg.representations.push_back(parse_representation(r));
    }
  } else if (key == "models") {
    cfg.models.clear();
    for (const auto& m : split_list(value, ',', ctx.where())) {
      cfg.models.push_back(parse_family(m));
    }
  } else if (key == "regimes") {
    cfg.regimes.clear();
    for (const auto& r : split_list(value, ',', ctx.where())) {
      cfg.regimes.push_back(parse_regime(r));
    }
  } else if (key == "subgroups") {
    cfg.eval.subgroup_attrs = split_list(value, ',', ctx.where());
  } else if (key == "first_test_year") {
    cfg.first_test_year = as_int(value);
  } else if (key == "fixed_window.first_year") {
    cfg.fixed_window_first = as_int(value);
  } else if (key == "fixed_window.last_year") {
    cfg.fixed_window_last = as_int(value);
  } else if (key == "scenario.n_stays_per_year") {
    cfg.scenario.n_stays_per_year = as_int(value);
  } else if (key == "scenario.first_year") {
    cfg.scenario.first_year = as_int(value);
  } else if (key == "scenario.last_year") {
    cfg.scenario.last_year = as_int(value);
  } else if (key == "scenario.switch_year") {
    cfg.scenario.switch_year = as_int(value);
  } else if (key == "scenario.n_groups") {
    cfg.scenario.n_groups = as_int(value);
  } else if (key == "scenario.items_per_group_pre") {
    cfg.scenario.items_per_group_pre = as_int(value);
  } else if (key == "scenario.items_per_group_post") {
    cfg.scenario.items_per_group_post = as_int(value);
  } else if (key == "scenario.vocabulary_switch") {
    cfg.scenario.vocabulary_switch = ctx.as_bool(value);
  } else if (key == "scenario.missing_rate") {
    cfg.scenario.missing_rate = ctx.as_double(value);
  } else if (key == "scenario.frequency_shifts") {
    cfg.scenario.frequency_shift = parse_shifts<FrequencyShift>(value, ctx);
  } else if (key == "scenario.value_shifts") {
    cfg.scenario.value_shift = parse_shifts<ValueShift>(value, ctx);
  } else if (key == "scenario.target_mortality_rate") {
    cfg.scenario.target_mortality_rate = ctx.as_double(value);
  } else if (key == "scenario.target_long_los_rate") {
    cfg.scenario.target_long_los_rate = ctx.as_double(value);
  } else if (key == "scenario.mortality_signal") {
    cfg.scenario.mortality_signal = ctx.as_double(value);
  } else if (key == "scenario.los_signal") {
    cfg.scenario.los_signal = ctx.as_double(value);
  } else if (key == "scenario.demographic_drift") {
    cfg.scenario.demographic_drift = ctx.as_bool(value);
  } else if (key == "scenario.ethnicity_mixture") {
    cfg.scenario.ethnicity_mixture = parse_mixture(value, ctx);
  } else if (key == "scenario.repeat_patient_rate") {
    cfg.scenario.repeat_patient_rate = ctx.as_double(value);
  } else if (key == "scenario.seed") {
    cfg.scenario.seed = ctx.as_seed(value);
    scenario_seed_set = true;
  } else if (key == "cohort.first_stay_only") {
    cfg.cohort.first_stay_only = ctx.as_bool(value);
  } else if (key == "cohort.min_stay_hours") {
    cfg.cohort.min_stay_hours = as_int(value);
  } else if (key == "cohort.min_age_years") {
    cfg.cohort.min_age_years = as_int(value);
  } else if (key == "cohort.censor_hours") {
    cfg.cohort.censor_hours = as_int(value);
  } else if (key == "search.n_draws") {
    cfg.eval.search.n_draws = as_int(value);
  } else if (key == "search.cv_folds") {
    cfg.eval.search.cv_folds = as_int(value);
  } else if (key == "search.lr.c_min") {
    cfg.eval.search.lr.c_min = ctx.as_double(value);
  } else if (key == "search.lr.c_max") {
    cfg.eval.search.lr.c_max = ctx.as_double(value);
  } else if (key == "search.lr.penalties") {
    cfg.eval.search.lr.allow_l1 = false;
    cfg.eval.search.lr.allow_l2 = false;
    for (const auto& p : split_list(value, ',', ctx.where())) {
      if (p == "l1") {
        cfg.eval.search.lr.allow_l1 = true;
      } else if (p == "l2") {
        cfg.eval.search.lr.allow_l2 = true;
      } else {
        ctx.fail("unknown penalty '" + p + "' (expected l1 or l2)");
      }
    }
  } else if (key == "search.lr.max_iter_min") {
    cfg.eval.search.lr.max_iter_min = as_int(value);
  } else if (key == "search.lr.max_iter_max") {
    cfg.eval.search.lr.max_iter_max = as_int(value);
  } else if (key == "search.lr.tol") {
    cfg.eval.search.lr.tol = ctx.as_double(value);
  } else if (key == "search.rf.trees_min") {
    cfg.eval.search.rf.trees_min = as_int(value);
  } else if (key == "search.rf.trees_max") {
    cfg.eval.search.rf.trees_max = as_int(value);
  } else if (key == "search.rf.depth_min") {
    cfg.eval.search.rf.depth_min = as_int(value);
  } else if (key == "search.rf.depth_max") {
    cfg.eval.search.rf.depth_max = as_int(value);
  } else if (key == "search.rf.leaf_min") {
    cfg.eval.search.rf.leaf_min = as_int(value);
  } else if (key == "search.rf.leaf_max") {
    cfg.eval.search.rf.leaf_max = as_int(value);
  } else if (key == "search.rf.split_min") {
    cfg.eval.search.rf.split_min = as_int(value);
  } else if (key == "search.rf.split_max") {
    cfg.eval.search.rf.split_max = as_int(value);
  } else if (key == "search.rf.feature_fraction_min") {
    cfg.eval.search.rf.feature_fraction_min = ctx.as_double(value);
  } else if (key == "search.rf.feature_fraction_max") {
    cfg.eval.search.rf.feature_fraction_max = ctx.as_double(value);
  } else if (key == "eval.n_boot") {
    cfg.eval.n_boot = as_int(value);
  } else if (key == "eval.subgroup_floor") {
    cfg.eval.subgroup_floor = as_int(value);
  } else if (key == "pca.k") {
    cfg.eval.pca_k = as_int(value);
  } else {
    ctx.fail("unknown key '" + key + "'");
  }
}

}  // namespace config_detail

inline RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  bool scenario_seed_set = false;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string raw =
        text.substr(start, (nl == std::string::npos ? text.size() : nl) - start);
    ++line_no;
    start = nl == std::string::npos ? text.size() + 1 : nl + 1;

    std::string stripped = raw;
    const std::size_t hash = stripped.find('#');
    if (hash != std::string::npos) stripped.erase(hash);
    stripped = config_detail::trim(stripped);
    if (stripped.empty()) continue;

    const config_detail::LineContext ctx{origin, line_no};
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) ctx.fail("expected 'key = value'");
    const std::string key = config_detail::trim(std::string_view(stripped).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) ctx.fail("empty key");
    if (!seen.insert(key).second) ctx.fail("duplicate key '" + key + "'");
    config_detail::apply_key(cfg, key, value, ctx, scenario_seed_set);
  }
  // The master seed drives the scenario unless it was pinned explicitly.
  cfg.scenario_seed_pinned = scenario_seed_set;
  if (!scenario_seed_set) cfg.scenario.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path), path);
}

}  // namespace driftlab
