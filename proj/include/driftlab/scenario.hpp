#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

// A step change in how often a group is observed: from `year` onward the
// per-hour observation probability becomes `rate`.
struct FrequencyShift {
  int group = 0;
  int year = 0;
  double rate = 0;
  friend bool operator==(const FrequencyShift&, const FrequencyShift&) = default;
};

// A step change in a group's recorded level: from `year` onward `offset`
// (canonical units) is added to every generated value of the group.
struct ValueShift {
  int group = 0;
  int year = 0;
  double offset = 0;
  friend bool operator==(const ValueShift&, const ValueShift&) = default;
};

// Everything the synthetic generator needs. Defaults give the standard
// benchmark: a 12-year cohort of roughly 4,000 stays whose item
// vocabulary is replaced wholesale at 2008, with mild demographic drift.
struct DriftScenario {
  int n_stays_per_year = 333;
  int first_year = 2001;
  int last_year = 2012;
  int switch_year = 2008;

  int n_groups = 68;
  int items_per_group_pre = 2;
  int items_per_group_post = 1;
  // When false every item spans both eras and no vocabulary change
  // happens at switch_year (stationary null scenario).
  bool vocabulary_switch = true;

  // Baseline probability that a group is NOT observed in a given hour.
  double missing_rate = 0.78;
  std::vector<FrequencyShift> frequency_shift;
  std::vector<ValueShift> value_shift;

  // Label calibration targets (fraction of stays).
  double target_mortality_rate = 0.074;
  double target_long_los_rate = 0.471;
  // Logistic slopes of the label models on latent severity.
  double mortality_signal = 3.2;
  double los_signal = 1.1;

  // Slow linear shift of the ethnicity mixture across the year range.
  bool demographic_drift = true;
  // Optional override of the ethnicity mixture (category, weight).
  // Weights are normalised; empty means the built-in five-way mixture.
  std::vector<std::pair<std::string, double>> ethnicity_mixture;

  // Fraction of stays (after the first year) that revisit an existing
  // patient; cohort selection later drops these.
  double repeat_patient_rate = 0.03;

  std::uint64_t seed = 198904;

  void validate() const {
    if (n_stays_per_year <= 0) throw_config("scenario: n_stays_per_year must be positive");
    if (first_year > last_year) {
      throw_config("scenario: first_year " + std::to_string(first_year) +
                   " exceeds last_year " + std::to_string(last_year));
    }
    if (!(first_year < switch_year && switch_year < last_year)) {
      throw_config("scenario: switch_year " + std::to_string(switch_year) +
                   " must lie strictly inside [" + std::to_string(first_year) + ", " +
                   std::to_string(last_year) + "]");
    }
    if (n_groups <= 0) throw_config("scenario: n_groups must be positive");
    if (items_per_group_pre <= 0) throw_config("scenario: items_per_group_pre must be positive");
    if (items_per_group_post <= 0) throw_config("scenario: items_per_group_post must be positive");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
      throw_config("scenario: missing_rate must be in [0, 1)");
    }
    for (const auto& f : frequency_shift) {
      if (f.group < 0 || f.group >= n_groups) {
        throw_config("scenario: frequency_shift group " + std::to_string(f.group) +
                     " outside [0, " + std::to_string(n_groups) + ")");
      }
      if (f.year < first_year || f.year > last_year) {
        throw_config("scenario: frequency_shift year " + std::to_string(f.year) +
                     " outside the year range");
      }
      if (!(f.rate >= 0.0 && f.rate <= 1.0)) {
        throw_config("scenario: frequency_shift rate must be in [0, 1]");
      }
    }
    for (const auto& v : value_shift) {
      if (v.group < 0 || v.group >= n_groups) {
        throw_config("scenario: value_shift group " + std::to_string(v.group) +
                     " outside [0, " + std::to_string(n_groups) + ")");
      }
      if (v.year < first_year || v.year > last_year) {
        throw_config("scenario: value_shift year " + std::to_string(v.year) +
                     " outside the year range");
      }
    }
    if (!(target_mortality_rate > 0.0 && target_mortality_rate < 1.0)) {
      throw_config("scenario: target_mortality_rate must be in (0, 1)");
    }
    if (!(target_long_los_rate > 0.0 && target_long_los_rate < 1.0)) {
      throw_config("scenario: target_long_los_rate must be in (0, 1)");
    }
    if (!(repeat_patient_rate >= 0.0 && repeat_patient_rate <= 0.5)) {
      throw_config("scenario: repeat_patient_rate must be in [0, 0.5]");
    }
    double mixture_total = 0;
    for (const auto& [name, w] : ethnicity_mixture) {
      if (name.empty()) throw_config("scenario: ethnicity_mixture category name is empty");
      if (!(w > 0)) throw_config("scenario: ethnicity_mixture weight for " + name + " must be positive");
      mixture_total += w;
    }
    if (!ethnicity_mixture.empty() && !(mixture_total > 0)) {
      throw_config("scenario: ethnicity_mixture weights must sum to a positive value");
    }
  }

  int n_years() const { return last_year - first_year + 1; }
};

}  // namespace driftlab
