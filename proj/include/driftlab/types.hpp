#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

using StayId = std::int64_t;
using PatientId = std::int64_t;
using ItemId = std::int64_t;

// Whether an item identifier exists before the vocabulary switch, after
// it, or throughout.
enum class Era { Pre, Post, Both };

inline std::string era_name(Era e) {
  switch (e) {
    case Era::Pre: return "pre";
    case Era::Post: return "post";
    case Era::Both: return "both";
  }
  return "both";
}

inline Era parse_era(std::string_view s, const std::string& context) {
  if (s == "pre") return Era::Pre;
  if (s == "post") return Era::Post;
  if (s == "both") return Era::Both;
  throw_data(context + ": unknown era \"" + std::string(s) + "\" (want pre|post|both)");
}

// One recorded measurement. hour_offset is hours since ICU admission.
struct ChartEvent {
  StayId stay_id = 0;
  ItemId item_id = 0;
  double hour_offset = 0;
  double value = 0;
  friend bool operator==(const ChartEvent&, const ChartEvent&) = default;
};

struct StayMeta {
  StayId stay_id = 0;
  PatientId patient_id = 0;
  int admit_year = 0;
  double age = 0;
  std::string gender;
  std::string ethnicity;
  std::string insurance;
  bool icu_mortality = false;
  double los_days = 0;
  friend bool operator==(const StayMeta&, const StayMeta&) = default;
};

struct ItemSpec {
  ItemId item_id = 0;
  std::string description;
  std::string recorded_unit;
  double to_canonical_factor = 1.0;  // canonical value = recorded * factor
  Era era = Era::Both;
  // Ground-truth group, known at generation time; -1 when loaded from
  // files. Representations never read this; grouping flows through
  // AggregationMap only.
  int group_id = -1;
};

inline bool same_item_record(const ItemSpec& a, const ItemSpec& b) {
  return a.item_id == b.item_id && a.description == b.description &&
         a.recorded_unit == b.recorded_unit &&
         a.to_canonical_factor == b.to_canonical_factor && a.era == b.era;
}

struct AggMember {
  ItemId item_id = 0;
  double to_canonical_factor = 1.0;
  friend bool operator==(const AggMember&, const AggMember&) = default;
};

struct AggGroup {
  int group_id = 0;
  std::string group_name;
  std::vector<AggMember> members;
  friend bool operator==(const AggGroup&, const AggGroup&) = default;
};

// Expert mapping from item identifiers to clinical aggregation groups.
struct AggregationMap {
  std::vector<AggGroup> groups;
  friend bool operator==(const AggregationMap&, const AggregationMap&) = default;

  // Each item may belong to at most one group and factors must be
  // positive; violations are configuration errors.
  void validate() const {
    std::unordered_set<ItemId> seen;
    std::unordered_set<int> group_ids;
    for (const auto& g : groups) {
      if (!group_ids.insert(g.group_id).second) {
        throw_config("aggregation map: duplicate group id " + std::to_string(g.group_id));
      }
      for (const auto& m : g.members) {
        if (!(m.to_canonical_factor > 0)) {
          throw_config("aggregation map: non-positive unit factor for item " +
                       std::to_string(m.item_id));
        }
        if (!seen.insert(m.item_id).second) {
          throw_config("aggregation map: item " + std::to_string(m.item_id) +
                       " appears in more than one group");
        }
      }
    }
  }
};

struct OntologyConcept {
  std::string concept_id;
  // Each synonym is a token sequence; matching is token-level.
  std::vector<std::vector<std::string>> synonyms;
  friend bool operator==(const OntologyConcept&, const OntologyConcept&) = default;
};

struct MiniOntology {
  std::vector<OntologyConcept> concepts;
  friend bool operator==(const MiniOntology&, const MiniOntology&) = default;
};

struct Dataset {
  std::vector<ChartEvent> events;
  std::vector<StayMeta> stays;
  std::vector<ItemSpec> items;
  AggregationMap agg_map;
  MiniOntology ontology;
};

inline std::unordered_map<ItemId, std::size_t> item_index(const std::vector<ItemSpec>& items) {
  std::unordered_map<ItemId, std::size_t> idx;
  idx.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!idx.emplace(items[i].item_id, i).second) {
      throw_data("duplicate item id " + std::to_string(items[i].item_id));
    }
  }
  return idx;
}

}  // namespace driftlab
