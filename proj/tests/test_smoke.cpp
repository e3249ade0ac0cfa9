// Whole-library smoke test: every public header compiles together, and
// a miniature pipeline runs end to end through the library API.

#include <catch2/catch_amalgamated.hpp>

#include "driftlab/cohort.hpp"
#include "driftlab/config.hpp"
#include "driftlab/csv.hpp"
#include "driftlab/datagen.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/evaluate.hpp"
#include "driftlab/flat.hpp"
#include "driftlab/forest.hpp"
#include "driftlab/logistic.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/pca.hpp"
#include "driftlab/report.hpp"
#include "driftlab/represent.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/runner.hpp"
#include "driftlab/scenario.hpp"
#include "driftlab/search.hpp"
#include "driftlab/serialize.hpp"
#include "driftlab/tensor.hpp"
#include "driftlab/types.hpp"

namespace {

driftlab::Dataset to_dataset(const driftlab::GenResult& gen) {
  driftlab::Dataset ds;
  ds.events = gen.events;
  ds.stays = gen.stays;
  ds.items = gen.items;
  ds.agg_map = gen.agg_map;
  ds.ontology = gen.ontology;
  return ds;
}

}  // namespace

TEST_CASE("miniature pipeline runs end to end", "[smoke]") {
  using namespace driftlab;

  DriftScenario sc;
  sc.n_stays_per_year = 60;
  sc.first_year = 2001;
  sc.last_year = 2005;
  sc.switch_year = 2003;
  sc.n_groups = 6;
  sc.seed = 11;
  sc.validate();

  const GenResult gen = generate(sc);
  REQUIRE(gen.stays.size() == 60u * 5u);
  const Dataset ds = to_dataset(gen);

  const BucketedCohort cohort = prepare_cohort(ds, CohortCriteria{});
  REQUIRE(cohort.size() > 100u);
  REQUIRE(cohort.first_year == 2001);
  REQUIRE(cohort.last_year == 2005);

  EvalSettings settings;
  settings.search.n_draws = 2;
  settings.search.cv_folds = 2;
  settings.search.lr.max_iter_min = 20;
  settings.search.lr.max_iter_max = 30;
  settings.search.rf.trees_min = 5;
  settings.search.rf.trees_max = 10;
  settings.search.rf.depth_min = 3;
  settings.search.rf.depth_max = 5;
  settings.n_boot = 20;
  settings.subgroup_attrs = {"gender"};

  const RegimeSpec regime =
      make_regime(RegimeKind::FixedWindow, cohort.first_year, cohort.last_year);
  const CellSpec spec{Task::LongLos, Representation::Aggregate, ModelFamily::Lr, regime, 2004};
  const CellOutcome out = eval_cell(cohort, spec, settings, 99);
  REQUIRE(out.ok);
  REQUIRE(out.rows.size() >= 1u);
  REQUIRE(out.rows.front().auroc.has_value());
  CHECK(*out.rows.front().auroc >= 0.0);
  CHECK(*out.rows.front().auroc <= 1.0);
  REQUIRE(out.artifacts.present);

  // Serialization round-trip of the cell artifact document.
  const std::string doc = to_document(out.artifacts, [&](std::ostream& os, const CellArtifacts& a) {
    write_cell_artifact(os, spec, a);
  });
  ser_detail::DocReader reader(doc, "<memory>");
  const CellArtifactDoc parsed = read_cell_artifact(reader);
  CHECK(parsed.cell == cell_name(spec));
  CHECK(parsed.dim == out.artifacts.repr.dim);
}
