#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "housekeep/embodiment.hpp"
#include "housekeep/preferences.hpp"
#include "housekeep/world.hpp"

namespace housekeep {

struct Episode {
  std::string id;  // assigned on generation/load; not serialized
  std::string scene_id;
  int max_steps = 1000;
  Pose agent_start;
  std::vector<ObjectInstance> objects;
  std::set<std::string> misplaced_ids;
};

struct EpisodeGenOptions {
  int max_steps = 1000;
  // Restrict to these object categories; empty = all table categories.
  std::vector<std::string> allowed_categories;
  int retry_budget = 1000;  // rejection-sampling attempts per object
};

// True iff a path exists from the episode start to within interact range of
// the object, and from there to within interact range of at least one
// Correct-class receptacle with free capacity.
bool check_solvable(const GridScene& scene, const PreferenceTable& table,
                    const std::vector<ObjectInstance>& placed, Pose agent_start,
                    const ObjectInstance& object);

// Reachability of the object itself (the "graspable" check for correctly
// placed objects).
bool check_graspable(const GridScene& scene, const std::vector<ObjectInstance>& placed,
                     Pose agent_start, const ObjectInstance& object);

// One episode: n_m misplaced + n_c correct objects, start pose, budget.
// n_m in [3,5]; n_m+n_c in [7,10]. Deterministic given seed.
// Throws InvalidCounts / GenerationExhausted.
Episode generate_episode(const GridScene& scene, const PreferenceTable& table,
                         int n_m, int n_c, uint64_t seed,
                         const EpisodeGenOptions& opts = {});

struct SplitConfig {
  std::map<std::string, std::string> scene_split;  // scene id -> train|val|test
  std::map<std::string, int> episode_counts;       // split name -> episode count
  int max_steps = 1000;
};

SplitConfig default_split_config();

// Splits: train, val-seen, val-unseen, test-seen, test-unseen. Object
// categories come from the catalog's split field; scene assignment from the
// config. Deterministic given seed.
std::map<std::string, std::vector<Episode>> generate_split(
    const SplitConfig& config, const std::vector<GridScene>& scenes,
    const Catalog& catalog, const PreferenceTable& table, uint64_t seed);

std::string episodes_to_json(const std::vector<Episode>& episodes);
std::vector<Episode> episodes_from_json(const std::string& json_text);
std::vector<Episode> load_episodes(const std::string& path);

}  // namespace housekeep
