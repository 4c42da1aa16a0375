#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "housekeep/errors.hpp"
#include "housekeep/harness.hpp"
#include "housekeep/synth.hpp"
#include "support/test_util.hpp"

using namespace housekeep;

namespace {

struct Fixture {
  GridScene scene;
  Catalog catalog;
  PreferenceTable table;
  std::vector<Episode> episodes;
};

Fixture make_fixture() {
  Fixture f;
  synth::SceneConfig sc;
  sc.id = "h_scene";
  sc.seed = 4;
  f.scene = synth::make_scene(sc);
  f.catalog = synth::make_catalog({});
  f.table = aggregate(synth_preferences(f.catalog, synth::vocabulary_of({f.scene}), 4, {}));
  for (int i = 0; i < 8; ++i) {
    Episode ep = generate_episode(f.scene, f.table, 3 + i % 3, 4, mix_seed(88, i));
    ep.id = "ep" + std::to_string(i);
    f.episodes.push_back(std::move(ep));
  }
  return f;
}

}  // namespace

TEST_CASE("serial and parallel batches produce identical results") {
  const Fixture f = make_fixture();
  RunConfig config;
  config.ranker = "oracle";
  config.explore = "frontier";
  config.seed = 5;
  const auto model = make_ranker(config, f.table);

  config.jobs = 1;
  const auto serial = run_batch(f.scene, f.episodes, *model, config);
  config.jobs = 8;
  const auto parallel = run_batch(f.scene, f.episodes, *model, config);

  REQUIRE(serial.size() == parallel.size());
  CHECK(results_to_jsonl(serial, true) == results_to_jsonl(parallel, true));
}

TEST_CASE("results jsonl round trips through a file") {
  const Fixture f = make_fixture();
  RunConfig config;
  config.ranker = "oracle";
  config.explore = "oracle";
  const auto model = make_ranker(config, f.table);
  const auto results = run_batch(f.scene, f.episodes, *model, config);

  const std::string path = std::filesystem::temp_directory_path() / "hk_results.jsonl";
  write_file(path, results_to_jsonl(results, false));
  const auto reloaded = load_results_jsonl(path);
  REQUIRE(reloaded.size() == results.size());
  CHECK(results_to_jsonl(reloaded, false) == results_to_jsonl(results, false));
  std::filesystem::remove(path);
}

TEST_CASE("make_ranker validates its inputs") {
  const Fixture f = make_fixture();
  RunConfig config;
  config.ranker = "oracle";
  CHECK(make_ranker(config, f.table) != nullptr);
  config.ranker = "random";
  CHECK(make_ranker(config, f.table) != nullptr);
  config.ranker = "external";
  CHECK_THROWS_AS(make_ranker(config, f.table), ValidationError);
  config.ranker = "cosmic";
  CHECK_THROWS_AS(make_ranker(config, f.table), ValidationError);
  config.ranker = "embedding";
  CHECK_THROWS_AS(make_ranker(config, f.table), ValidationError);
}

TEST_CASE("planner config translation covers the exploration names") {
  RunConfig config;
  config.explore = "oracle";
  CHECK(planner_config_from(config, 1).oracle_explore);
  config.explore = "frontier";
  CHECK(planner_config_from(config, 1).explore == ExploreKind::Frontier);
  config.explore = "random";
  CHECK(planner_config_from(config, 1).explore == ExploreKind::Random);
  config.explore = "forward-right";
  CHECK(planner_config_from(config, 1).explore == ExploreKind::ForwardRight);
  config.explore = "teleport";
  CHECK_THROWS_AS(planner_config_from(config, 1), ValidationError);
  config.explore = "frontier";
  config.ordering = "score-gain";
  CHECK(planner_config_from(config, 1).ordering == Ordering::ScoreGain);
}

TEST_CASE("report rendering emits one row per label with all columns") {
  const Fixture f = make_fixture();
  RunConfig config;
  config.ranker = "oracle";
  config.explore = "oracle";
  const auto model = make_ranker(config, f.table);
  const auto results = run_batch(f.scene, f.episodes, *model, config);
  std::vector<MetricsReport> reports;
  for (const auto& r : results) reports.push_back(compute_metrics(r, f.table));
  const AggregateReport agg = aggregate(reports);

  const std::string text = render_report_text({{"oracle_oracle", agg}, {"other", agg}});
  CHECK(text.find("oracle_oracle") != std::string::npos);
  CHECK(text.find("other") != std::string::npos);
  for (const char* col : {"ES", "OS", "SOS", "RQ", "MC", "MOC", "PPE", "steps"}) {
    CHECK(text.find(col) != std::string::npos);
  }
  const std::string csv = render_report_csv({{"a", agg}});
  CHECK(csv.find("label,n,ES_mean,ES_stderr") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("trajectory log interleaves planner events by timestamp") {
  const Fixture f = make_fixture();
  RunConfig config;
  config.ranker = "oracle";
  config.explore = "oracle";
  const auto model = make_ranker(config, f.table);
  const auto results = run_batch(f.scene, f.episodes, *model, config);
  const std::string jsonl = trajectory_to_jsonl(results[0]);
  CHECK(jsonl.find("\"event\":\"plan\"") != std::string::npos);
  CHECK(jsonl.find("\"action\"") != std::string::npos);
  // One JSON object per line.
  size_t lines = std::count(jsonl.begin(), jsonl.end(), '\n');
  CHECK(lines >= results[0].trajectory.size());
}
