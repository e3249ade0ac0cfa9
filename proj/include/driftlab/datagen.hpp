#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "driftlab/csv.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/scenario.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// Synthetic ICU cohort generator.
//
// Latent model, per stay: severity s ~ N(0,1) plus small ethnicity
// offsets. Each measurement group g follows an hourly trajectory
//   x_g(h) = b_g + scale_g * (loading_g * s + sqrt(1 - loading_g^2) * u_g(h))
// where u_g is a stationary unit-variance AR(1) chain. Group g is
// observed in a given hour with probability (1 - missing_rate), subject
// to scheduled frequency shifts; an observation picks one era-valid item
// of the group uniformly and records x (plus any scheduled value offset
// and measurement noise) divided by the item's to_canonical_factor.
//
// Labels are Bernoulli draws from logistic models on severity whose
// intercepts are calibrated by bisection so that realised prevalences hit
// the scenario targets.
//
// Every stay draws from its own counter-derived random substream, so the
// output is bit-identical no matter how stays are scheduled.

struct LatentPatient {
  StayId stay_id = 0;
  double severity = 0;
};

struct GenResult {
  std::vector<ChartEvent> events;  // grouped by stay, hours ascending
  std::vector<StayMeta> stays;     // generation order: year, then index
  std::vector<ItemSpec> items;     // sorted by item_id
  AggregationMap agg_map;
  MiniOntology ontology;
  std::vector<LatentPatient> truth;  // aligned with stays
};

namespace gen_detail {

inline const std::vector<std::string>& group_name_lexicon() {
  static const std::vector<std::string> names = {
      "heart rate", "respiratory rate", "oxygen saturation",
      "mean arterial blood pressure", "systolic blood pressure",
      "diastolic blood pressure", "central venous pressure", "body temperature",
      "blood glucose", "serum sodium", "serum potassium", "serum calcium",
      "serum magnesium", "serum phosphate", "serum chloride",
      "blood urea nitrogen", "serum creatinine", "white blood cell count",
      "red blood cell count", "platelet count", "hemoglobin level",
      "hematocrit fraction", "serum bicarbonate", "anion gap", "serum lactate",
      "arterial ph", "arterial oxygen partial pressure",
      "arterial carbon dioxide partial pressure", "fraction inspired oxygen",
      "tidal volume", "minute ventilation", "peak airway pressure",
      "positive end expiratory pressure", "urine output", "fluid balance",
      "serum albumin", "total bilirubin", "alanine aminotransferase",
      "aspartate aminotransferase", "alkaline phosphatase", "serum ammonia",
      "serum amylase", "serum lipase", "prothrombin time",
      "partial thromboplastin time", "international normalized ratio",
      "serum fibrinogen", "d dimer level", "serum troponin", "creatine kinase",
      "brain natriuretic peptide", "serum cortisol",
      "thyroid stimulating hormone", "free thyroxine", "serum triglycerides",
      "total cholesterol", "high density lipoprotein", "low density lipoprotein",
      "serum uric acid", "serum osmolality", "urine specific gravity",
      "glasgow coma scale", "richmond agitation score", "pain scale score",
      "capillary refill time", "pupil diameter", "serum ferritin",
      "serum transferrin"};
  return names;
}

inline std::string group_name(int g) {
  const auto& lex = group_name_lexicon();
  if (g < static_cast<int>(lex.size())) return lex[static_cast<std::size_t>(g)];
  return "laboratory assay " + std::to_string(g) + " level";
}

inline const std::vector<std::string>& variant_suffixes() {
  static const std::vector<std::string> v = {
      "manual",        "automated",       "bedside",     "arterial sample",
      "venous sample", "finger stick",    "calibrated",  "secondary sensor"};
  return v;
}

// Concepts that are strict sub-spans of several group names; span
// matching must discard them whenever the full name is present.
inline const std::vector<std::string>& generic_subconcepts() {
  static const std::vector<std::string> v = {"blood pressure", "blood cell count",
                                             "partial pressure"};
  return v;
}

struct UnitChoice {
  double factor;
  const char* unit;
};

inline const std::array<UnitChoice, 7>& unit_table() {
  static const std::array<UnitChoice, 7> t = {{{1.0, "iu"},
                                               {0.1, "deci"},
                                               {10.0, "deca"},
                                               {0.001, "milli"},
                                               {1000.0, "kilo"},
                                               {0.0555, "mmol"},
                                               {18.018, "mgdl"}}};
  return t;
}

struct GroupParams {
  double baseline = 0;
  double scale = 1;
  double loading = 0;
  // Item indices into GenResult::items, split by era validity.
  std::vector<std::size_t> pre_items;
  std::vector<std::size_t> post_items;
};

inline std::vector<std::string> split_tokens_ws(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Intercept a such that mean(sigmoid(a + slope * s)) hits `target`.
inline double calibrate_intercept(const std::vector<double>& severities, double slope,
                                  double target) {
  double lo = -40.0, hi = 20.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double mean = 0;
    for (double s : severities) mean += sigmoid(mid + slope * s);
    mean /= static_cast<double>(severities.size());
    if (mean < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Mixture {
  std::vector<std::string> names;
  std::vector<double> weights;  // normalised, cumulative on sample
  std::string sample(Rng& rng) const {
    double u = rng.uniform01();
    double acc = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
      acc += weights[i];
      if (u < acc) return names[i];
    }
    return names.back();
  }
};

inline Mixture make_mixture(const std::vector<std::pair<std::string, double>>& entries) {
  Mixture m;
  double total = 0;
  for (const auto& [n, w] : entries) total += w;
  for (const auto& [n, w] : entries) {
    m.names.push_back(n);
    m.weights.push_back(w / total);
  }
  return m;
}

inline double ethnicity_effect(const std::string& name) {
  if (name == "black") return 0.10;
  if (name == "hispanic") return 0.05;
  if (name == "asian") return -0.05;
  if (name == "other") return 0.15;
  return 0.0;  // white and unrecognised categories
}

}  // namespace gen_detail

inline GenResult generate(const DriftScenario& sc) {
  using namespace gen_detail;
  sc.validate();

  GenResult out;

  // --- item vocabulary, aggregation map, ontology -----------------------
  Rng item_rng = rng_for(sc.seed, "items");
  std::vector<GroupParams> params(static_cast<std::size_t>(sc.n_groups));
  {
    Rng group_rng = rng_for(sc.seed, "groups");
    for (int g = 0; g < sc.n_groups; ++g) {
      auto& p = params[static_cast<std::size_t>(g)];
      p.baseline = group_rng.uniform(10.0, 150.0);
      p.scale = p.baseline * group_rng.uniform(0.06, 0.16);
      double mag = group_rng.uniform(0.35, 0.90);
      p.loading = group_rng.bernoulli(0.75) ? mag : -mag;
    }
  }

  const auto& suffixes = variant_suffixes();
  const auto& units = unit_table();
  for (int g = 0; g < sc.n_groups; ++g) {
    const std::string base = group_name(g);
    AggGroup agg;
    agg.group_id = g;
    agg.group_name = base;
    auto add_item = [&](ItemId id, int variant, Era era) {
      ItemSpec item;
      item.item_id = id;
      item.description = variant == 0
                             ? base
                             : base + " " + suffixes[static_cast<std::size_t>(
                                                (g * 3 + variant - 1) %
                                                static_cast<int>(suffixes.size()))];
      const UnitChoice& u =
          variant == 0 ? units[0]
                       : units[item_rng.bounded(units.size())];
      item.recorded_unit = u.unit;
      item.to_canonical_factor = u.factor;
      item.era = era;
      item.group_id = g;
      std::size_t idx = out.items.size();
      out.items.push_back(item);
      agg.members.push_back({id, u.factor});
      auto& p = params[static_cast<std::size_t>(g)];
      if (era == Era::Both) {
        p.pre_items.push_back(idx);
        p.post_items.push_back(idx);
      } else if (era == Era::Pre) {
        p.pre_items.push_back(idx);
      } else {
        p.post_items.push_back(idx);
      }
    };
    for (int j = 0; j < sc.items_per_group_pre; ++j) {
      add_item(1000 + static_cast<ItemId>(g) * sc.items_per_group_pre + j, j,
               sc.vocabulary_switch ? Era::Pre : Era::Both);
    }
    for (int j = 0; j < sc.items_per_group_post; ++j) {
      add_item(220000 + static_cast<ItemId>(g) * sc.items_per_group_post + j,
               sc.items_per_group_pre + j,
               sc.vocabulary_switch ? Era::Post : Era::Both);
    }
    out.agg_map.groups.push_back(std::move(agg));
  }
  std::sort(out.items.begin(), out.items.end(),
            [](const ItemSpec& a, const ItemSpec& b) { return a.item_id < b.item_id; });
  // items were re-ordered; group item index lists must be rebuilt
  {
    auto idx = item_index(out.items);
    for (auto& p : params) {
      p.pre_items.clear();
      p.post_items.clear();
    }
    for (std::size_t i = 0; i < out.items.size(); ++i) {
      const ItemSpec& item = out.items[i];
      auto& p = params[static_cast<std::size_t>(item.group_id)];
      if (item.era == Era::Both || item.era == Era::Pre) p.pre_items.push_back(i);
      if (item.era == Era::Both || item.era == Era::Post) p.post_items.push_back(i);
    }
  }

  for (int g = 0; g < sc.n_groups; ++g) {
    OntologyConcept c;
    c.concept_id = "C" + std::to_string(1000 + g);
    c.synonyms.push_back(split_tokens_ws(group_name(g)));
    out.ontology.concepts.push_back(std::move(c));
  }
  for (std::size_t k = 0; k < suffixes.size(); ++k) {
    OntologyConcept c;
    c.concept_id = "C" + std::to_string(2000 + k);
    c.synonyms.push_back(split_tokens_ws(suffixes[k]));
    out.ontology.concepts.push_back(std::move(c));
  }
  for (std::size_t k = 0; k < generic_subconcepts().size(); ++k) {
    OntologyConcept c;
    c.concept_id = "C" + std::to_string(2900 + k);
    c.synonyms.push_back(split_tokens_ws(generic_subconcepts()[k]));
    out.ontology.concepts.push_back(std::move(c));
  }

  // --- demographics and severity (first pass) ---------------------------
  const Mixture gender = make_mixture({{"F", 0.5}, {"M", 0.5}});
  const Mixture insurance = make_mixture({{"medicare", 0.38},
                                          {"private", 0.33},
                                          {"medicaid", 0.15},
                                          {"government", 0.09},
                                          {"selfpay", 0.05}});
  const std::vector<std::pair<std::string, double>> eth_base = {{"white", 0.70},
                                                                {"black", 0.10},
                                                                {"hispanic", 0.09},
                                                                {"asian", 0.06},
                                                                {"other", 0.05}};
  const std::vector<std::pair<std::string, double>> eth_drifted = {{"white", 0.60},
                                                                   {"black", 0.12},
                                                                   {"hispanic", 0.13},
                                                                   {"asian", 0.09},
                                                                   {"other", 0.06}};

  const int n_years = sc.n_years();
  const std::size_t n_total =
      static_cast<std::size_t>(n_years) * static_cast<std::size_t>(sc.n_stays_per_year);
  out.stays.reserve(n_total);
  out.truth.reserve(n_total);

  std::vector<double> severities(n_total);
  std::vector<PatientId> patient_pool;  // patients admitted in earlier years
  std::size_t idx = 0;
  for (int y = sc.first_year; y <= sc.last_year; ++y) {
    Mixture eth;
    if (!sc.ethnicity_mixture.empty()) {
      eth = make_mixture(sc.ethnicity_mixture);
    } else if (sc.demographic_drift && sc.last_year > sc.first_year) {
      double tau = static_cast<double>(y - sc.first_year) /
                   static_cast<double>(sc.last_year - sc.first_year);
      std::vector<std::pair<std::string, double>> mixed;
      for (std::size_t i = 0; i < eth_base.size(); ++i) {
        mixed.push_back({eth_base[i].first,
                         (1 - tau) * eth_base[i].second + tau * eth_drifted[i].second});
      }
      eth = make_mixture(mixed);
    } else {
      eth = make_mixture(eth_base);
    }

    const std::size_t year_begin = idx;
    for (int k = 0; k < sc.n_stays_per_year; ++k, ++idx) {
      Rng rng = rng_for(sc.seed, "stay", static_cast<std::uint64_t>(idx), "demo");
      StayMeta stay;
      stay.stay_id = 100001 + static_cast<StayId>(idx);
      stay.patient_id = 700001 + static_cast<PatientId>(idx);
      stay.admit_year = y;
      stay.age = 16.0 + 74.0 * std::pow(rng.uniform01(), 1.2);
      stay.gender = gender.sample(rng);
      stay.ethnicity = eth.sample(rng);
      stay.insurance = insurance.sample(rng);
      if (!patient_pool.empty() && rng.bernoulli(sc.repeat_patient_rate)) {
        stay.patient_id =
            patient_pool[static_cast<std::size_t>(rng.bounded(patient_pool.size()))];
      }
      severities[idx] = rng.normal() + ethnicity_effect(stay.ethnicity);
      out.stays.push_back(std::move(stay));
    }
    for (std::size_t i = year_begin; i < idx; ++i) {
      patient_pool.push_back(out.stays[i].patient_id);
    }
  }

  // --- label calibration -------------------------------------------------
  const double a_mort =
      calibrate_intercept(severities, sc.mortality_signal, sc.target_mortality_rate);
  const double a_los =
      calibrate_intercept(severities, sc.los_signal, sc.target_long_los_rate);

  // --- labels, trajectories, events (second pass) ------------------------
  constexpr int kEventHorizonHours = 36;
  constexpr double kArRho = 0.55;
  constexpr double kMeasurementNoise = 0.15;

  for (std::size_t i = 0; i < out.stays.size(); ++i) {
    StayMeta& stay = out.stays[i];
    const double s = severities[i];
    out.truth.push_back({stay.stay_id, s});

    Rng label_rng = rng_for(sc.seed, "stay", static_cast<std::uint64_t>(i), "labels");
    stay.icu_mortality = label_rng.bernoulli(sigmoid(a_mort + sc.mortality_signal * s));
    const bool long_los = label_rng.bernoulli(sigmoid(a_los + sc.los_signal * s));
    stay.los_days = long_los ? 3.0 + label_rng.exponential(2.5)
                             : 1.5 + 1.49 * label_rng.uniform01();

    Rng ev = rng_for(sc.seed, "stay", static_cast<std::uint64_t>(i), "events");
    const int year = stay.admit_year;
    const bool post_era = sc.vocabulary_switch && year >= sc.switch_year;

    // Scheduled drift entries active for this admission year.
    std::vector<double> obs_rate(static_cast<std::size_t>(sc.n_groups),
                                 1.0 - sc.missing_rate);
    std::vector<double> offset(static_cast<std::size_t>(sc.n_groups), 0.0);
    for (const auto& f : sc.frequency_shift) {
      if (f.year <= year) obs_rate[static_cast<std::size_t>(f.group)] = f.rate;
    }
    for (const auto& v : sc.value_shift) {
      if (v.year <= year) offset[static_cast<std::size_t>(v.group)] = v.offset;
    }

    std::vector<double> chain(static_cast<std::size_t>(sc.n_groups));
    for (int h = 0; h < kEventHorizonHours; ++h) {
      for (int g = 0; g < sc.n_groups; ++g) {
        auto& p = params[static_cast<std::size_t>(g)];
        double& u = chain[static_cast<std::size_t>(g)];
        const double eps = ev.normal();
        u = (h == 0) ? eps : kArRho * u + std::sqrt(1.0 - kArRho * kArRho) * eps;
        if (!ev.bernoulli(obs_rate[static_cast<std::size_t>(g)])) continue;
        const auto& pool = post_era ? p.post_items : p.pre_items;
        const ItemSpec& item = out.items[pool[ev.bounded(pool.size())]];
        const double latent =
            p.baseline +
            p.scale * (p.loading * s + std::sqrt(1.0 - p.loading * p.loading) * u);
        const double canonical = latent + offset[static_cast<std::size_t>(g)] +
                                 p.scale * kMeasurementNoise * ev.normal();
        ChartEvent e;
        e.stay_id = stay.stay_id;
        e.item_id = item.item_id;
        e.hour_offset = static_cast<double>(h) + ev.uniform01();
        e.value = canonical / item.to_canonical_factor;
        out.events.push_back(e);
      }
    }
  }

  return out;
}

// ---------------------------------------------------------------------------
// File emission. Five CSVs with fixed schemas; see README for details.

struct DatasetPaths {
  std::string events;
  std::string stays;
  std::string items;
  std::string agg_map;
  std::string ontology;

  static DatasetPaths in_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    DatasetPaths p;
    p.events = (fs::path(dir) / "events.csv").string();
    p.stays = (fs::path(dir) / "stays.csv").string();
    p.items = (fs::path(dir) / "items.csv").string();
    p.agg_map = (fs::path(dir) / "agg_map.csv").string();
    p.ontology = (fs::path(dir) / "ontology.csv").string();
    return p;
  }
};

inline void emit_dataset(const GenResult& gen, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_io("cannot create directory " + dir + ": " + ec.message());
  DatasetPaths paths = DatasetPaths::in_dir(dir);

  {
    CsvWriter w(paths.events);
    w.write_row({"stay_id", "item_id", "hour_offset", "value"});
    for (const auto& e : gen.events) {
      w.write_row({format_int(e.stay_id), format_int(e.item_id),
                   format_double(e.hour_offset), format_double(e.value)});
    }
    w.close();
  }
  {
    CsvWriter w(paths.stays);
    w.write_row({"stay_id", "patient_id", "admit_year", "age", "gender", "ethnicity",
                 "insurance", "icu_mortality", "los_days"});
    for (const auto& s : gen.stays) {
      w.write_row({format_int(s.stay_id), format_int(s.patient_id),
                   format_int(s.admit_year), format_double(s.age), s.gender,
                   s.ethnicity, s.insurance, s.icu_mortality ? "1" : "0",
                   format_double(s.los_days)});
    }
    w.close();
  }
  {
    CsvWriter w(paths.items);
    w.write_row({"item_id", "description", "recorded_unit", "to_canonical_factor", "era"});
    for (const auto& it : gen.items) {
      w.write_row({format_int(it.item_id), it.description, it.recorded_unit,
                   format_double(it.to_canonical_factor), era_name(it.era)});
    }
    w.close();
  }
  {
    CsvWriter w(paths.agg_map);
    w.write_row({"group_id", "group_name", "item_id", "to_canonical_factor"});
    for (const auto& g : gen.agg_map.groups) {
      for (const auto& m : g.members) {
        w.write_row({format_int(g.group_id), g.group_name, format_int(m.item_id),
                     format_double(m.to_canonical_factor)});
      }
    }
    w.close();
  }
  {
    CsvWriter w(paths.ontology);
    w.write_row({"concept_id", "synonym"});
    for (const auto& c : gen.ontology.concepts) {
      for (const auto& syn : c.synonyms) {
        std::string joined;
        for (const auto& t : syn) joined += (joined.empty() ? "" : " ") + t;
        w.write_row({c.concept_id, joined});
      }
    }
    w.close();
  }
}

}  // namespace driftlab
