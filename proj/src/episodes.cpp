#include "housekeep/episodes.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "housekeep/errors.hpp"
#include "housekeep/log.hpp"
#include "housekeep/rng.hpp"

namespace housekeep {

using ordered_json = nlohmann::ordered_json;

namespace {

// Cells within interact range of `target`, reachable from `start`.
bool reachable_interact_pose(const GridScene& scene, const std::vector<int>& dist_from_start,
                             Cell target) {
  const NavGrid nav = nav_from_scene(scene);
  for (const Pose& pose : interact_poses(nav, target)) {
    if (dist_from_start[static_cast<size_t>(pose.cell.r) * scene.cols + pose.cell.c] >= 0) {
      return true;
    }
  }
  return false;
}

int load_of(const std::vector<ObjectInstance>& placed, const std::string& rec_id) {
  int n = 0;
  for (const auto& obj : placed) {
    if (obj.on == rec_id) ++n;
  }
  return n;
}

}  // namespace

bool check_graspable(const GridScene& scene, const std::vector<ObjectInstance>& placed,
                     Pose agent_start, const ObjectInstance& object) {
  (void)placed;
  const Receptacle& rec = scene.receptacle_by_id(object.on);
  const std::vector<int> dist = bfs_distances(scene, agent_start.cell);
  return reachable_interact_pose(scene, dist, rec.cell);
}

bool check_solvable(const GridScene& scene, const PreferenceTable& table,
                    const std::vector<ObjectInstance>& placed, Pose agent_start,
                    const ObjectInstance& object) {
  const std::vector<int> dist = bfs_distances(scene, agent_start.cell);
  const Receptacle& source = scene.receptacle_by_id(object.on);
  if (!reachable_interact_pose(scene, dist, source.cell)) return false;

  // Free space is one component, so reachability from the pick region equals
  // reachability from the start.
  for (const Receptacle& rec : scene.receptacles) {
    const std::string room_cat = scene.room_by_id(rec.room).category;
    const PrefEntry* entry = table.find({object.category, room_cat, rec.category});
    if (entry == nullptr || entry->c_or <= 0.5) continue;
    if (load_of(placed, rec.id) >= rec.capacity) continue;
    if (reachable_interact_pose(scene, dist, rec.cell)) return true;
  }
  return false;
}

namespace {

Pose sample_agent_start(const GridScene& scene, Rng& rng) {
  // Distance-to-nearest-receptacle via multi-source BFS.
  std::vector<int> dist(scene.grid.size(), -1);
  std::deque<Cell> frontier;
  for (const Receptacle& rec : scene.receptacles) {
    int& slot = dist[static_cast<size_t>(rec.cell.r) * scene.cols + rec.cell.c];
    if (slot == -1) {
      slot = 0;
      frontier.push_back(rec.cell);
    }
  }
  static const int dr[4] = {-1, 1, 0, 0};
  static const int dc[4] = {0, 0, -1, 1};
  while (!frontier.empty()) {
    Cell p = frontier.front();
    frontier.pop_front();
    const int d = dist[static_cast<size_t>(p.r) * scene.cols + p.c];
    for (int k = 0; k < 4; ++k) {
      Cell q{p.r + dr[k], p.c + dc[k]};
      if (!scene.is_free(q)) continue;
      int& slot = dist[static_cast<size_t>(q.r) * scene.cols + q.c];
      if (slot == -1) {
        slot = d + 1;
        frontier.push_back(q);
      }
    }
  }
  std::vector<Cell> far, near, any;
  for (int r = 0; r < scene.rows; ++r) {
    for (int c = 0; c < scene.cols; ++c) {
      const Cell p{r, c};
      if (!scene.is_free(p)) continue;
      any.push_back(p);
      const int d = dist[static_cast<size_t>(r) * scene.cols + c];
      if (d < 0 || d >= 2) far.push_back(p);
      else if (d >= 1) near.push_back(p);
    }
  }
  const std::vector<Cell>& pool = !far.empty() ? far : (!near.empty() ? near : any);
  Pose pose;
  pose.cell = pool[bounded(rng, pool.size())];
  pose.heading = static_cast<Heading>(bounded(rng, 4));
  return pose;
}

std::vector<std::string> eligible_categories(const GridScene& scene,
                                             const PreferenceTable& table,
                                             const std::vector<std::string>& allowed) {
  // Keep only objects that have at least one Correct receptacle in the scene.
  std::vector<std::string> candidates =
      allowed.empty() ? table.object_categories() : allowed;
  std::sort(candidates.begin(), candidates.end());
  std::vector<std::string> out;
  for (const std::string& cat : candidates) {
    bool has_correct = false;
    for (const Receptacle& rec : scene.receptacles) {
      const std::string room_cat = scene.room_by_id(rec.room).category;
      const PrefEntry* entry = table.find({cat, room_cat, rec.category});
      if (entry != nullptr && entry->c_or > 0.5) {
        has_correct = true;
        break;
      }
    }
    if (has_correct) out.push_back(cat);
  }
  return out;
}

std::vector<std::string> class_receptacles(const GridScene& scene,
                                           const PreferenceTable& table,
                                           const std::string& category,
                                           PlacementClass want) {
  std::vector<std::string> out;
  for (const Receptacle& rec : scene.receptacles) {
    const std::string room_cat = scene.room_by_id(rec.room).category;
    const PrefEntry* entry = table.find({category, room_cat, rec.category});
    if (entry == nullptr) continue;
    PlacementClass cls = PlacementClass::Neutral;
    if (entry->c_or > 0.5) cls = PlacementClass::Correct;
    else if (entry->m_or > 0.5) cls = PlacementClass::Misplaced;
    if (cls == want) out.push_back(rec.id);
  }
  return out;
}

}  // namespace

Episode generate_episode(const GridScene& scene, const PreferenceTable& table,
                         int n_m, int n_c, uint64_t seed,
                         const EpisodeGenOptions& opts) {
  if (n_m < 3 || n_m > 5) {
    throw InvalidCounts("misplaced count must be in [3,5], got " + std::to_string(n_m));
  }
  const int total = n_m + n_c;
  if (total < 7 || total > 10) {
    throw InvalidCounts("total object count must be in [7,10], got " + std::to_string(total));
  }

  Rng rng(seed);
  Episode ep;
  ep.scene_id = scene.id;
  ep.max_steps = opts.max_steps;
  ep.agent_start = sample_agent_start(scene, rng);

  const std::vector<std::string> eligible = eligible_categories(scene, table,
                                                                opts.allowed_categories);
  if (eligible.empty()) {
    throw GenerationExhausted("no eligible object categories in scene '" + scene.id + "'");
  }
  // Prefer distinct categories; duplicate instances only when the pool is
  // smaller than the episode.
  const int max_per_category =
      (total + static_cast<int>(eligible.size()) - 1) / static_cast<int>(eligible.size());

  std::map<std::string, int> used;
  auto place_one = [&](bool misplaced) {
    for (int attempt = 0; attempt < opts.retry_budget; ++attempt) {
      const std::string& cat = eligible[bounded(rng, eligible.size())];
      if (used[cat] >= max_per_category) continue;
      std::vector<std::string> recs = class_receptacles(
          scene, table, cat,
          misplaced ? PlacementClass::Misplaced : PlacementClass::Correct);
      // Skip receptacles already at capacity.
      std::erase_if(recs, [&](const std::string& rec_id) {
        return load_of(ep.objects, rec_id) >= scene.receptacle_by_id(rec_id).capacity;
      });
      if (recs.empty()) continue;
      ObjectInstance obj;
      obj.category = cat;
      obj.id = cat + "_" + std::to_string(ep.objects.size());
      obj.on = recs[bounded(rng, recs.size())];
      const bool ok = misplaced
                          ? check_solvable(scene, table, ep.objects, ep.agent_start, obj)
                          : check_graspable(scene, ep.objects, ep.agent_start, obj);
      if (!ok) continue;
      ++used[cat];
      if (misplaced) ep.misplaced_ids.insert(obj.id);
      ep.objects.push_back(std::move(obj));
      return;
    }
    throw GenerationExhausted("retry budget exhausted placing a " +
                              std::string(misplaced ? "misplaced" : "correct") +
                              " object in scene '" + scene.id + "'");
  };

  for (int i = 0; i < n_m; ++i) place_one(true);
  for (int i = 0; i < n_c; ++i) place_one(false);
  return ep;
}

SplitConfig default_split_config() {
  SplitConfig config;
  config.episode_counts = {{"train", 100},
                           {"val-seen", 20},
                           {"val-unseen", 20},
                           {"test-seen", 20},
                           {"test-unseen", 20}};
  return config;
}

std::map<std::string, std::vector<Episode>> generate_split(
    const SplitConfig& config, const std::vector<GridScene>& scenes,
    const Catalog& catalog, const PreferenceTable& table, uint64_t seed) {
  for (const GridScene& scene : scenes) {
    auto it = config.scene_split.find(scene.id);
    if (it == config.scene_split.end()) {
      throw ValidationError("scene '" + scene.id + "' missing from scene split assignment");
    }
    if (it->second != "train" && it->second != "val" && it->second != "test") {
      throw ValidationError("scene split for '" + scene.id + "' must be train/val/test");
    }
  }

  struct SplitSpec {
    const char* name;
    const char* scene_group;
    Split object_split;
  };
  static const SplitSpec kSplits[] = {
      {"train", "train", Split::Seen},
      {"val-seen", "val", Split::Seen},
      {"val-unseen", "val", Split::ValUnseen},
      {"test-seen", "test", Split::Seen},
      {"test-unseen", "test", Split::TestUnseen},
  };

  std::map<std::string, std::vector<Episode>> out;
  uint64_t salt = 0;
  for (const SplitSpec& spec : kSplits) {
    auto count_it = config.episode_counts.find(spec.name);
    const int count = count_it == config.episode_counts.end() ? 0 : count_it->second;
    std::vector<const GridScene*> group;
    for (const GridScene& scene : scenes) {
      if (config.scene_split.at(scene.id) == spec.scene_group) group.push_back(&scene);
    }
    std::vector<std::string> allowed;
    for (const ObjectCategory& cat : catalog.in_split(spec.object_split)) {
      allowed.push_back(cat.name);
    }
    std::vector<Episode>& episodes = out[spec.name];
    if (count > 0 && group.empty()) {
      throw GenerationExhausted(std::string("no scenes assigned to group '") +
                                spec.scene_group + "' for split '" + spec.name + "'");
    }
    for (int i = 0; i < count; ++i) {
      const GridScene& scene = *group[i % group.size()];
      const uint64_t ep_seed = mix_seed(seed, ++salt);
      Rng pick(ep_seed);
      const int n_m = 3 + static_cast<int>(bounded(pick, 3));
      const int total = 7 + static_cast<int>(bounded(pick, 4));
      EpisodeGenOptions opts;
      opts.max_steps = config.max_steps;
      opts.allowed_categories = allowed;
      Episode ep = generate_episode(scene, table, n_m, total - n_m,
                                    mix_seed(ep_seed, 1), opts);
      ep.id = std::string(spec.name) + "_" + std::to_string(i);
      episodes.push_back(std::move(ep));
    }
  }
  return out;
}

std::string episodes_to_json(const std::vector<Episode>& episodes) {
  ordered_json arr = ordered_json::array();
  for (const Episode& ep : episodes) {
    ordered_json j;
    j["scene_id"] = ep.scene_id;
    j["max_steps"] = ep.max_steps;
    j["agent_start"] = {{"cell", {ep.agent_start.cell.r, ep.agent_start.cell.c}},
                        {"heading", heading_name(ep.agent_start.heading)}};
    ordered_json objs = ordered_json::array();
    for (const ObjectInstance& obj : ep.objects) {
      ordered_json jo;
      jo["id"] = obj.id;
      jo["category"] = obj.category;
      jo["on"] = obj.on;
      jo["misplaced"] = ep.misplaced_ids.count(obj.id) > 0;
      objs.push_back(std::move(jo));
    }
    j["objects"] = std::move(objs);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<Episode> episodes_from_json(const std::string& json_text) {
  std::vector<Episode> out;
  try {
    ordered_json arr = ordered_json::parse(json_text);
    size_t idx = 0;
    for (const auto& j : arr) {
      Episode ep;
      ep.id = "ep" + std::to_string(idx++);
      ep.scene_id = j.at("scene_id").get<std::string>();
      ep.max_steps = j.at("max_steps").get<int>();
      const auto& js = j.at("agent_start");
      ep.agent_start.cell = {js.at("cell").at(0).get<int>(), js.at("cell").at(1).get<int>()};
      ep.agent_start.heading = heading_from_name(js.at("heading").get<std::string>());
      for (const auto& jo : j.at("objects")) {
        ObjectInstance obj;
        obj.id = jo.at("id").get<std::string>();
        obj.category = jo.at("category").get<std::string>();
        obj.on = jo.at("on").get<std::string>();
        if (jo.at("misplaced").get<bool>()) ep.misplaced_ids.insert(obj.id);
        ep.objects.push_back(std::move(obj));
      }
      out.push_back(std::move(ep));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("episodes: ") + e.what());
  }
  return out;
}

std::vector<Episode> load_episodes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open episode file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return episodes_from_json(ss.str());
}

}  // namespace housekeep
