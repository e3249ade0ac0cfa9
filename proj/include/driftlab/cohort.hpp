#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftlab/csv.hpp"
#include "driftlab/datagen.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/tensor.hpp"
#include "driftlab/types.hpp"

namespace driftlab {

// Cohort definition and hourly feature assembly.

struct CohortCriteria {
  bool first_stay_only = true;
  double min_stay_hours = 36.0;
  double min_age_years = 15.0;  // strictly greater than
  int censor_hours = 24;

  void validate() const {
    if (censor_hours <= 0) throw_config("cohort: censor_hours must be positive");
    if (min_stay_hours < censor_hours) {
      throw_config("cohort: min_stay_hours must be at least censor_hours");
    }
    if (min_age_years < 0) throw_config("cohort: min_age_years must be non-negative");
  }
};

// ---------------------------------------------------------------------------
// Loading

inline std::vector<ChartEvent> load_events(const std::string& path) {
  std::vector<ChartEvent> events;
  read_csv(path, {"stay_id", "item_id", "hour_offset", "value"},
           [&](std::size_t line, const std::vector<std::string>& f) {
             ChartEvent e;
             e.stay_id = parse_int_field(f[0], path, line, 1);
             e.item_id = parse_int_field(f[1], path, line, 2);
             e.hour_offset = parse_double_field(f[2], path, line, 3);
             e.value = parse_double_field(f[3], path, line, 4);
             if (e.hour_offset < 0) {
               throw_data(path + ":" + std::to_string(line) + ": negative hour_offset");
             }
             events.push_back(e);
           });
  return events;
}

inline std::vector<StayMeta> load_stays(const std::string& path) {
  std::vector<StayMeta> stays;
  read_csv(path,
           {"stay_id", "patient_id", "admit_year", "age", "gender", "ethnicity",
            "insurance", "icu_mortality", "los_days"},
           [&](std::size_t line, const std::vector<std::string>& f) {
             StayMeta s;
             s.stay_id = parse_int_field(f[0], path, line, 1);
             s.patient_id = parse_int_field(f[1], path, line, 2);
             s.admit_year = static_cast<int>(parse_int_field(f[2], path, line, 3));
             s.age = parse_double_field(f[3], path, line, 4);
             s.gender = f[4];
             s.ethnicity = f[5];
             s.insurance = f[6];
             std::int64_t mort = parse_int_field(f[7], path, line, 8);
             if (mort != 0 && mort != 1) {
               throw_data(path + ":" + std::to_string(line) + ":8: icu_mortality must be 0 or 1");
             }
             s.icu_mortality = mort == 1;
             s.los_days = parse_double_field(f[8], path, line, 9);
             if (s.age <= 0) {
               throw_data(path + ":" + std::to_string(line) + ":4: age must be positive");
             }
             if (s.los_days < 0) {
               throw_data(path + ":" + std::to_string(line) + ":9: los_days must be non-negative");
             }
             stays.push_back(std::move(s));
           });
  return stays;
}

inline std::vector<ItemSpec> load_items(const std::string& path) {
  std::vector<ItemSpec> items;
  read_csv(path, {"item_id", "description", "recorded_unit", "to_canonical_factor", "era"},
           [&](std::size_t line, const std::vector<std::string>& f) {
             ItemSpec it;
             it.item_id = parse_int_field(f[0], path, line, 1);
             it.description = f[1];
             it.recorded_unit = f[2];
             it.to_canonical_factor = parse_double_field(f[3], path, line, 4);
             if (!(it.to_canonical_factor > 0)) {
               throw_data(path + ":" + std::to_string(line) +
                          ":4: to_canonical_factor must be positive");
             }
             it.era = parse_era(f[4], path + ":" + std::to_string(line) + ":5");
             items.push_back(std::move(it));
           });
  return items;
}

inline AggregationMap load_agg_map(const std::string& path) {
  AggregationMap map;
  std::map<int, std::size_t> group_pos;
  read_csv(path, {"group_id", "group_name", "item_id", "to_canonical_factor"},
           [&](std::size_t line, const std::vector<std::string>& f) {
             int gid = static_cast<int>(parse_int_field(f[0], path, line, 1));
             auto [it, inserted] = group_pos.try_emplace(gid, map.groups.size());
             if (inserted) {
               map.groups.push_back(AggGroup{gid, f[1], {}});
             } else if (map.groups[it->second].group_name != f[1]) {
               throw_data(path + ":" + std::to_string(line) + ": group " + f[0] +
                          " has conflicting names");
             }
             AggMember m;
             m.item_id = parse_int_field(f[2], path, line, 3);
             m.to_canonical_factor = parse_double_field(f[3], path, line, 4);
             map.groups[it->second].members.push_back(m);
           });
  map.validate();
  return map;
}

inline MiniOntology load_ontology(const std::string& path) {
  MiniOntology onto;
  std::map<std::string, std::size_t> concept_pos;
  read_csv(path, {"concept_id", "synonym"},
           [&](std::size_t line, const std::vector<std::string>& f) {
             if (f[0].empty()) {
               throw_data(path + ":" + std::to_string(line) + ":1: empty concept_id");
             }
             auto [it, inserted] = concept_pos.try_emplace(f[0], onto.concepts.size());
             if (inserted) onto.concepts.push_back(OntologyConcept{f[0], {}});
             std::vector<std::string> tokens = gen_detail::split_tokens_ws(f[1]);
             if (tokens.empty()) {
               throw_data(path + ":" + std::to_string(line) + ":2: empty synonym");
             }
             onto.concepts[it->second].synonyms.push_back(std::move(tokens));
           });
  return onto;
}

// Loads all five files and checks referential integrity: every event
// must reference a known item and a known stay.
inline Dataset load_dataset(const DatasetPaths& paths) {
  Dataset ds;
  ds.events = load_events(paths.events);
  ds.stays = load_stays(paths.stays);
  ds.items = load_items(paths.items);
  ds.agg_map = load_agg_map(paths.agg_map);
  ds.ontology = load_ontology(paths.ontology);

  auto items_by_id = item_index(ds.items);
  std::unordered_map<StayId, bool> stay_ids;
  stay_ids.reserve(ds.stays.size());
  for (const auto& s : ds.stays) {
    if (!stay_ids.emplace(s.stay_id, true).second) {
      throw_data(paths.stays + ": duplicate stay id " + std::to_string(s.stay_id));
    }
  }
  for (const auto& e : ds.events) {
    if (!items_by_id.contains(e.item_id)) {
      throw_data(paths.events + ": event references unknown item " +
                 std::to_string(e.item_id));
    }
    if (!stay_ids.contains(e.stay_id)) {
      throw_data(paths.events + ": event references unknown stay " +
                 std::to_string(e.stay_id));
    }
  }
  for (const auto& g : ds.agg_map.groups) {
    for (const auto& m : g.members) {
      if (!items_by_id.contains(m.item_id)) {
        throw_data(paths.agg_map + ": group " + std::to_string(g.group_id) +
                   " references unknown item " + std::to_string(m.item_id));
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Selection

// Keeps each patient's chronologically first stay (earliest admit year,
// stay id as tiebreak), then applies the stay-length and age filters.
// Output is sorted by stay id; the operation is idempotent.
inline std::vector<StayMeta> select_cohort(const std::vector<StayMeta>& stays,
                                           const CohortCriteria& criteria) {
  criteria.validate();
  std::vector<const StayMeta*> candidates;
  if (criteria.first_stay_only) {
    std::unordered_map<PatientId, const StayMeta*> first;
    first.reserve(stays.size());
    for (const auto& s : stays) {
      auto [it, inserted] = first.try_emplace(s.patient_id, &s);
      if (!inserted) {
        const StayMeta* cur = it->second;
        if (s.admit_year < cur->admit_year ||
            (s.admit_year == cur->admit_year && s.stay_id < cur->stay_id)) {
          it->second = &s;
        }
      }
    }
    candidates.reserve(first.size());
    for (const auto& [pid, ptr] : first) candidates.push_back(ptr);
  } else {
    candidates.reserve(stays.size());
    for (const auto& s : stays) candidates.push_back(&s);
  }

  std::vector<StayMeta> out;
  out.reserve(candidates.size());
  for (const StayMeta* s : candidates) {
    if (s->los_days * 24.0 < criteria.min_stay_hours) continue;
    if (!(s->age > criteria.min_age_years)) continue;
    out.push_back(*s);
  }
  std::sort(out.begin(), out.end(),
            [](const StayMeta& a, const StayMeta& b) { return a.stay_id < b.stay_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Hourly bucketing

// Mean of observed values per half-open hour bucket [h, h+1), truncated
// at censor_hours. Events at or past the censor horizon are ignored, so
// the result is invariant to anything recorded later in the stay.
inline HourlyTensor bucket_hourly(std::span<const ChartEvent> stay_events,
                                  const StayMeta& stay, const CohortCriteria& criteria,
                                  const ColumnSpace& item_columns,
                                  const std::unordered_map<ItemId, int>& item_to_col) {
  HourlyTensor t;
  t.stay_id = stay.stay_id;
  t.hours = criteria.censor_hours;
  t.width = item_columns.width();

  // (hour, col) -> (sum, count)
  std::map<std::pair<int, int>, std::pair<double, std::int64_t>> acc;
  for (const auto& e : stay_events) {
    if (e.stay_id != stay.stay_id) {
      throw_data("bucket_hourly: event for stay " + std::to_string(e.stay_id) +
                 " passed with stay " + std::to_string(stay.stay_id));
    }
    if (e.hour_offset >= criteria.censor_hours) continue;
    const int hour = static_cast<int>(e.hour_offset);
    auto it = item_to_col.find(e.item_id);
    if (it == item_to_col.end()) {
      throw_data("bucket_hourly: event references item " + std::to_string(e.item_id) +
                 " absent from the column space");
    }
    auto& slot = acc[{hour, it->second}];
    slot.first += e.value;
    slot.second += 1;
  }
  t.cells.reserve(acc.size());
  for (const auto& [key, sum_count] : acc) {
    t.cells.push_back({static_cast<std::int16_t>(key.first),
                       static_cast<std::int32_t>(key.second),
                       sum_count.first / static_cast<double>(sum_count.second)});
  }
  return t;
}

// Item-id column space ("i<item_id>", sorted lexicographically) plus the
// item -> column lookup used when bucketing events.
struct ItemColumns {
  ColumnSpace space;
  std::unordered_map<ItemId, int> to_col;
};

inline ItemColumns make_item_columns(const std::vector<ItemSpec>& items) {
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (const auto& it : items) ids.push_back("i" + std::to_string(it.item_id));
  ItemColumns cols{make_column_space(std::move(ids)), {}};
  cols.to_col.reserve(items.size());
  for (const auto& it : items) {
    cols.to_col[it.item_id] = cols.space.index_of("i" + std::to_string(it.item_id));
  }
  return cols;
}

// ---------------------------------------------------------------------------
// Demographics

// One-hot encoding of gender and ethnicity (optionally insurance;
// excluded by default). Category lists are the sorted distinct values
// across the dataset, fixed per run.
struct DemographicEncoder {
  struct Block {
    std::string attribute;
    std::vector<std::string> categories;  // sorted
  };
  std::vector<Block> blocks;

  int dim() const {
    int d = 0;
    for (const auto& b : blocks) d += static_cast<int>(b.categories.size());
    return d;
  }

  std::vector<std::string> feature_ids() const {
    std::vector<std::string> ids;
    for (const auto& b : blocks) {
      for (const auto& c : b.categories) ids.push_back("demo:" + b.attribute + "=" + c);
    }
    return ids;
  }

  void encode(const StayMeta& stay, std::vector<float>& out) const {
    out.assign(static_cast<std::size_t>(dim()), 0.0f);
    int base = 0;
    for (const auto& b : blocks) {
      const std::string& v = b.attribute == "gender"
                                 ? stay.gender
                                 : (b.attribute == "ethnicity" ? stay.ethnicity
                                                               : stay.insurance);
      auto it = std::lower_bound(b.categories.begin(), b.categories.end(), v);
      if (it != b.categories.end() && *it == v) {
        out[static_cast<std::size_t>(base + (it - b.categories.begin()))] = 1.0f;
      }
      base += static_cast<int>(b.categories.size());
    }
  }
};

inline DemographicEncoder make_demographic_encoder(const std::vector<StayMeta>& stays,
                                                   bool include_insurance = false) {
  auto distinct = [&](auto field) {
    std::vector<std::string> vals;
    for (const auto& s : stays) vals.push_back(field(s));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
  };
  DemographicEncoder enc;
  enc.blocks.push_back({"gender", distinct([](const StayMeta& s) { return s.gender; })});
  enc.blocks.push_back(
      {"ethnicity", distinct([](const StayMeta& s) { return s.ethnicity; })});
  if (include_insurance) {
    enc.blocks.push_back(
        {"insurance", distinct([](const StayMeta& s) { return s.insurance; })});
  }
  return enc;
}

}  // namespace driftlab
