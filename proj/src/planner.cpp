#include "housekeep/planner.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "housekeep/errors.hpp"
#include "housekeep/log.hpp"

namespace housekeep {

std::string ordering_name(Ordering o) {
  switch (o) {
    case Ordering::DiscoveryTime: return "discovery-time";
    case Ordering::ScoreGain: return "score-gain";
    case Ordering::AgentObjectDist: return "agent-object-dist";
    case Ordering::ObjectReceptacleDist: return "object-receptacle-dist";
  }
  return "discovery-time";
}

Ordering ordering_from_name(const std::string& name) {
  if (name == "discovery-time") return Ordering::DiscoveryTime;
  if (name == "score-gain") return Ordering::ScoreGain;
  if (name == "agent-object-dist") return Ordering::AgentObjectDist;
  if (name == "object-receptacle-dist") return Ordering::ObjectReceptacleDist;
  throw ParseError("unknown ordering: " + name);
}

namespace {

// BFS over known-Free map cells.
std::vector<int> map_distances(const AlloMap& map, Cell from) {
  std::vector<int> dist(static_cast<size_t>(map.rows()) * map.cols(), -1);
  if (!map.in_bounds(from) || map.status(from) != MapCell::Free) return dist;
  static const int dr[4] = {-1, 1, 0, 0};
  static const int dc[4] = {0, 0, -1, 1};
  std::deque<Cell> frontier{from};
  dist[static_cast<size_t>(from.r) * map.cols() + from.c] = 0;
  while (!frontier.empty()) {
    Cell p = frontier.front();
    frontier.pop_front();
    const int d = dist[static_cast<size_t>(p.r) * map.cols() + p.c];
    for (int k = 0; k < 4; ++k) {
      Cell q{p.r + dr[k], p.c + dc[k]};
      if (!map.in_bounds(q) || map.status(q) != MapCell::Free) continue;
      int& slot = dist[static_cast<size_t>(q.r) * map.cols() + q.c];
      if (slot == -1) {
        slot = d + 1;
        frontier.push_back(q);
      }
    }
  }
  return dist;
}

int dist_at(const std::vector<int>& dist, const AlloMap& map, Cell p) {
  if (!map.in_bounds(p)) return std::numeric_limits<int>::max();
  const int d = dist[static_cast<size_t>(p.r) * map.cols() + p.c];
  return d < 0 ? std::numeric_limits<int>::max() : d;
}

}  // namespace

RearrangementPlan pending_rearrangements(
    const AlloMap& map, const ScoreModel& model, double s_l, const PlannerConfig& config,
    Cell agent_cell, const std::set<std::pair<std::string, std::string>>& blacklist,
    const std::optional<std::string>& held) {
  RearrangementPlan plan;

  // Candidate (room, receptacle) category pairs over discovered receptacles.
  std::vector<std::pair<std::string, std::string>> category_pairs;
  for (const auto& [id, rec] : map.receptacles()) {
    category_pairs.emplace_back(rec.room_category, rec.category);
  }
  if (category_pairs.empty()) return plan;

  struct Sortable {
    PlanItem item;
    int t_discovered;
    Cell object_cell;
    Cell target_cell;
  };
  std::vector<Sortable> items;

  for (const auto& [obj_id, obj] : map.objects()) {
    if (held && *held == obj_id) continue;
    if (!obj.on) continue;
    auto cur_it = map.receptacles().find(*obj.on);
    if (cur_it == map.receptacles().end()) continue;
    const DiscoveredReceptacle& cur = cur_it->second;
    const double cur_score = model.score_orr(obj.category, cur.room_category, cur.category);
    if (cur_score > s_l) continue;  // classified correctly placed

    const std::vector<ScoredCandidate> joint =
        score_joint(model, obj.category, category_pairs, config.tau);
    auto joint_of = [&joint](const std::string& room, const std::string& rec) {
      for (const ScoredCandidate& c : joint) {
        if (c.room == room && c.receptacle == rec) return c.probability;
      }
      return 0.0;
    };

    // Best discovered above-threshold receptacle with known free capacity.
    std::optional<std::string> best_id;
    double best_joint = -1.0;
    for (const auto& [rec_id, rec] : map.receptacles()) {
      if (rec_id == *obj.on) continue;
      if (blacklist.count({obj_id, rec_id}) > 0) continue;
      if (map.known_load(rec_id) >= rec.capacity) continue;
      const double score = model.score_orr(obj.category, rec.room_category, rec.category);
      if (score <= s_l) continue;
      const double p = joint_of(rec.room_category, rec.category);
      if (p > best_joint) {
        best_joint = p;
        best_id = rec_id;
      }
    }
    if (!best_id) continue;

    Sortable s;
    s.item.object = obj_id;
    s.item.target = *best_id;
    s.item.expected_gain = best_joint - joint_of(cur.room_category, cur.category);
    s.t_discovered = obj.t_discovered;
    s.object_cell = cur.cell;
    s.target_cell = map.receptacles().at(*best_id).cell;
    items.push_back(std::move(s));
  }

  switch (config.ordering) {
    case Ordering::DiscoveryTime:
      std::sort(items.begin(), items.end(), [](const Sortable& a, const Sortable& b) {
        if (a.t_discovered != b.t_discovered) return a.t_discovered < b.t_discovered;
        return a.item.object < b.item.object;
      });
      break;
    case Ordering::ScoreGain:
      std::sort(items.begin(), items.end(), [](const Sortable& a, const Sortable& b) {
        if (a.item.expected_gain != b.item.expected_gain) {
          return a.item.expected_gain > b.item.expected_gain;
        }
        return a.item.object < b.item.object;
      });
      break;
    case Ordering::AgentObjectDist: {
      const std::vector<int> dist = map_distances(map, agent_cell);
      std::sort(items.begin(), items.end(), [&](const Sortable& a, const Sortable& b) {
        const int da = dist_at(dist, map, a.object_cell);
        const int db = dist_at(dist, map, b.object_cell);
        if (da != db) return da < db;
        return a.item.object < b.item.object;
      });
      break;
    }
    case Ordering::ObjectReceptacleDist:
      std::sort(items.begin(), items.end(), [&](const Sortable& a, const Sortable& b) {
        const int da = dist_at(map_distances(map, a.object_cell), map, a.target_cell);
        const int db = dist_at(map_distances(map, b.object_cell), map, b.target_cell);
        if (da != db) return da < db;
        return a.item.object < b.item.object;
      });
      break;
  }

  for (Sortable& s : items) plan.items.push_back(std::move(s.item));
  return plan;
}

namespace {

struct RunContext {
  const GridScene& scene;
  const Episode& episode;
  const ScoreModel& model;
  const PlannerConfig& config;
  int max_steps;
  int range;

  WorldState world;
  AgentState state;
  AlloMap map;
  EpisodeResult result;
  std::set<std::pair<std::string, std::string>> blacklist;
  std::optional<std::string> held_source;

  RunContext(const GridScene& s, const Episode& ep, const ScoreModel& m,
             const PlannerConfig& cfg)
      : scene(s), episode(ep), model(m), config(cfg),
        max_steps(cfg.max_steps > 0 ? cfg.max_steps : ep.max_steps),
        range(interact_range(s)),
        world(s, ep.objects) {
    state.pose = ep.agent_start;
    map = cfg.oracle_explore ? AlloMap::full_knowledge(s, world)
                             : AlloMap(s.rows, s.cols);
  }

  StepResult exec(Action action, const std::optional<std::string>& hint) {
    StepResult r = step(scene, world, state, action, max_steps, config.fov_depth, hint);
    state = r.state;
    map.update(scene, r.obs, state.step_count);
    if (r.interaction) {
      const PickPlaceOutcome& o = *r.interaction;
      if (o.kind == PickPlaceOutcome::Kind::Picked) {
        map.note_picked(*o.object);
        result.interactions.push_back({state.step_count, *o.object, true,
                                       o.receptacle.value_or("")});
      } else if (o.kind == PickPlaceOutcome::Kind::Placed) {
        map.note_placed(*o.object, *o.receptacle);
        result.interactions.push_back({state.step_count, *o.object, false, *o.receptacle});
      }
    }
    result.trajectory.push_back(
        {state.step_count, action, state.pose, state.held, r.collision, r.interaction});
    return r;
  }

  void event(const std::string& kind, const std::string& detail) {
    result.events.push_back({state.step_count, kind, detail});
  }
};

}  // namespace

EpisodeResult run_planner(const GridScene& scene, const Episode& episode,
                          const ScoreModel& model, const PlannerConfig& config) {
  RunContext ctx(scene, episode, model, config);
  EpisodeResult& result = ctx.result;
  result.episode_id = episode.id;
  result.scene_id = scene.id;
  result.max_steps = ctx.max_steps;
  result.navigable_cells = navigable_area(scene);
  for (const Receptacle& rec : scene.receptacles) {
    result.receptacle_context[rec.id] = {scene.room_by_id(rec.room).category, rec.category};
  }
  for (const ObjectInstance& obj : episode.objects) {
    result.object_categories[obj.id] = obj.category;
    result.initial_placements[obj.id] = obj.on;
  }
  result.misplaced_ids = episode.misplaced_ids;

  // Initial observation at t=0, before any action.
  ctx.map.update(scene, observe(scene, ctx.world, ctx.state, config.fov_depth), 0);

  ExplorationStrategy strategy(config.explore, config.explore_seed);
  bool explore_exhausted = false;
  const StepFn exec = [&ctx](Action a, const std::optional<std::string>& hint) {
    return ctx.exec(a, hint);
  };

  // Places the held object: best above-threshold target, then the source
  // receptacle, then the nearest known receptacle with free capacity.
  auto place_held = [&]() -> bool {
    const std::string obj_id = *ctx.state.held;
    const std::string category = ctx.world.object(obj_id).category;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [id, rec] : ctx.map.receptacles()) {
      pairs.emplace_back(rec.room_category, rec.category);
    }
    std::vector<std::string> targets;
    if (!pairs.empty()) {
      const auto joint = score_joint(ctx.model, category, pairs, config.tau);
      std::vector<std::pair<double, std::string>> above;
      for (const auto& [id, rec] : ctx.map.receptacles()) {
        if (ctx.blacklist.count({obj_id, id}) > 0) continue;
        if (ctx.map.known_load(id) >= rec.capacity) continue;
        const double score = ctx.model.score_orr(category, rec.room_category, rec.category);
        if (score <= config.s_l) continue;
        for (const ScoredCandidate& c : joint) {
          if (c.room == rec.room_category && c.receptacle == rec.category) {
            above.emplace_back(c.probability, id);
            break;
          }
        }
      }
      std::sort(above.begin(), above.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (const auto& [p, id] : above) targets.push_back(id);
    }
    if (ctx.held_source && ctx.blacklist.count({obj_id, *ctx.held_source}) == 0) {
      targets.push_back(*ctx.held_source);
    }
    {
      const std::vector<int> dist = map_distances(ctx.map, ctx.state.pose.cell);
      std::vector<std::pair<int, std::string>> fallback;
      for (const auto& [id, rec] : ctx.map.receptacles()) {
        if (ctx.blacklist.count({obj_id, id}) > 0) continue;
        if (ctx.map.known_load(id) >= rec.capacity) continue;
        fallback.emplace_back(dist_at(dist, ctx.map, rec.cell), id);
      }
      std::sort(fallback.begin(), fallback.end());
      for (const auto& [d, id] : fallback) targets.push_back(id);
    }

    std::set<std::string> tried;
    for (const std::string& target : targets) {
      if (!tried.insert(target).second) continue;
      const NavGrid nav = ctx.map.nav_view(ctx.range);
      const Cell cell = ctx.map.receptacles().at(target).cell;
      const SkillResult r = place_object(nav, ctx.state.pose, target, cell, exec);
      ctx.event("place", obj_id + " on " + target + " " + skill_status_name(r.status));
      if (r.status == SkillResult::Status::Success) {
        ctx.held_source.reset();
        return true;
      }
      if (r.status != SkillResult::Status::NoPath) {
        ctx.blacklist.insert({obj_id, target});
      }
    }
    return false;
  };

  try {
    while (ctx.state.step_count < ctx.max_steps) {
      if (ctx.state.held) {
        if (!place_held()) {
          ctx.event("plan", "stuck holding " + *ctx.state.held + "; stopping");
          break;
        }
        continue;
      }

      const RearrangementPlan plan =
          pending_rearrangements(ctx.map, model, config.s_l, config, ctx.state.pose.cell,
                                 ctx.blacklist, ctx.state.held);
      if (plan.empty()) {
        if (explore_exhausted) {
          ctx.event("plan", "idle-stop: nothing to rearrange, exploration complete");
          break;
        }
        ctx.event("explore", "burst of " + std::to_string(config.n_e));
        for (int i = 0; i < config.n_e && ctx.state.step_count < ctx.max_steps; ++i) {
          Action action;
          try {
            action = explore_step(strategy, ctx.map, ctx.state, ctx.range);
          } catch (const ExplorationExhausted&) {
            explore_exhausted = true;
            ctx.event("explore", "exhausted");
            break;
          }
          ctx.exec(action, std::nullopt);
        }
        continue;
      }

      // Execute the first reachable item, then replan.
      bool executed = false;
      for (const PlanItem& item : plan.items) {
        const auto on = ctx.map.objects().at(item.object).on;
        if (!on) continue;
        const Cell obj_cell = ctx.map.receptacles().at(*on).cell;
        ctx.event("plan", item.object + " -> " + item.target);
        const NavGrid nav = ctx.map.nav_view(ctx.range);
        const SkillResult pick = pick_object(nav, ctx.state.pose, item.object, obj_cell, exec);
        if (pick.status == SkillResult::Status::NoPath) {
          ctx.event("pick", item.object + " no_path");
          continue;  // try the next planned item
        }
        ctx.event("pick", item.object + " " + skill_status_name(pick.status));
        if (pick.status != SkillResult::Status::Success) {
          ctx.blacklist.insert({item.object, item.target});
          executed = true;
          break;
        }
        ctx.held_source = pick.receptacle;
        const NavGrid nav2 = ctx.map.nav_view(ctx.range);
        const Cell target_cell = ctx.map.receptacles().at(item.target).cell;
        const SkillResult place =
            place_object(nav2, ctx.state.pose, item.target, target_cell, exec);
        ctx.event("place", item.object + " on " + item.target + " " +
                               skill_status_name(place.status));
        if (place.status == SkillResult::Status::Success) {
          ctx.held_source.reset();
        } else {
          ctx.blacklist.insert({item.object, item.target});
        }
        executed = true;
        break;
      }
      if (!executed) {
        // Every planned item is unreachable on the current map.
        if (explore_exhausted) {
          ctx.event("plan", "idle-stop: planned items unreachable, exploration complete");
          break;
        }
        ctx.event("explore", "burst of " + std::to_string(config.n_e) + " (plan unreachable)");
        for (int i = 0; i < config.n_e && ctx.state.step_count < ctx.max_steps; ++i) {
          Action action;
          try {
            action = explore_step(strategy, ctx.map, ctx.state, ctx.range);
          } catch (const ExplorationExhausted&) {
            explore_exhausted = true;
            ctx.event("explore", "exhausted");
            break;
          }
          ctx.exec(action, std::nullopt);
        }
      }
    }
  } catch (const BudgetExhausted&) {
    ctx.event("plan", "step budget exhausted");
  }

  for (const ObjectInstance& obj : episode.objects) {
    result.final_placements[obj.id] = ctx.world.on_receptacle(obj.id);
  }
  for (const std::string& id : episode.misplaced_ids) {
    auto it = ctx.map.objects().find(id);
    if (it != ctx.map.objects().end()) {
      result.discovered_misplaced[id] = it->second.t_discovered;
    }
  }
  result.explored_free_cells = ctx.map.explored_free_cells();
  result.steps_used = ctx.state.step_count;
  return result;
}

}  // namespace housekeep
