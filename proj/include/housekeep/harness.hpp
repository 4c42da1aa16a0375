#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "housekeep/episodes.hpp"
#include "housekeep/metrics.hpp"
#include "housekeep/planner.hpp"
#include "housekeep/ranker.hpp"

namespace housekeep {

struct RunConfig {
  std::string scene_path;
  std::string episodes_path;
  std::string prefs_path;
  std::string embeddings_path;
  std::string checkpoint_path;
  std::string score_table_path;
  std::string ranker = "oracle";     // oracle | embedding | external | random
  std::string explore = "frontier";  // frontier | random | forward-right | oracle
  std::string ordering = "discovery-time";
  int n_e = 16;
  int max_steps = 0;  // 0 = per-episode budget
  std::optional<double> s_l;
  uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir;
  bool write_trajectories = false;
  bool dump_maps = false;
};

// Builds the ScoreModel named by the config (table needed for oracle).
std::unique_ptr<ScoreModel> make_ranker(const RunConfig& config,
                                        const PreferenceTable& table);

PlannerConfig planner_config_from(const RunConfig& config, uint64_t episode_seed);

// Runs every episode (worker pool of `jobs`), deterministically: the result
// of episode i depends only on (config, seed, i), so serial and parallel
// execution produce identical outputs.
std::vector<EpisodeResult> run_batch(const GridScene& scene,
                                     const std::vector<Episode>& episodes,
                                     const ScoreModel& model, const RunConfig& config);

// results.jsonl: one result per line, in episode order.
std::string results_to_jsonl(const std::vector<EpisodeResult>& results,
                             bool include_trajectory);
std::vector<EpisodeResult> load_results_jsonl(const std::string& path);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Aggregate table over labeled result sets (one row per label).
std::string render_report_text(
    const std::vector<std::pair<std::string, AggregateReport>>& rows);
std::string render_report_csv(
    const std::vector<std::pair<std::string, AggregateReport>>& rows);

}  // namespace housekeep
