#include "housekeep/embodiment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "housekeep/errors.hpp"

namespace housekeep {

namespace {

constexpr int kHeadingDr[4] = {-1, 0, 1, 0};  // N E S W
constexpr int kHeadingDc[4] = {0, 1, 0, -1};

}  // namespace

std::string heading_name(Heading h) {
  static const char* names[4] = {"N", "E", "S", "W"};
  return names[static_cast<int>(h)];
}

Heading heading_from_name(const std::string& name) {
  if (name == "N") return Heading::N;
  if (name == "E") return Heading::E;
  if (name == "S") return Heading::S;
  if (name == "W") return Heading::W;
  throw ParseError("unknown heading: " + name);
}

std::string action_name(Action a) {
  static const char* names[4] = {"forward", "turn_left", "turn_right", "interact"};
  return names[static_cast<int>(a)];
}

Action action_from_name(const std::string& name) {
  if (name == "forward") return Action::Forward;
  if (name == "turn_left") return Action::TurnLeft;
  if (name == "turn_right") return Action::TurnRight;
  if (name == "interact") return Action::Interact;
  throw ParseError("unknown action: " + name);
}

Cell forward_of(Cell p, Heading h, int k) {
  const int i = static_cast<int>(h);
  return {p.r + kHeadingDr[i] * k, p.c + kHeadingDc[i] * k};
}

Heading turn_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Heading turn_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

int interact_range(const GridScene& scene) {
  return static_cast<int>(std::lround(1.5 / scene.cell_size_m));
}

WorldState::WorldState(const GridScene& scene, const std::vector<ObjectInstance>& objects)
    : scene_(&scene) {
  for (const auto& obj : objects) {
    scene.receptacle_by_id(obj.on);  // validates the reference
    if (!objects_.emplace(obj.id, obj).second) {
      throw ValidationError("duplicate object instance id: " + obj.id);
    }
  }
}

const ObjectInstance& WorldState::object(const std::string& id) const {
  auto it = objects_.find(id);
  if (it == objects_.end()) throw ValidationError("unknown object instance: " + id);
  return it->second;
}

std::optional<std::string> WorldState::on_receptacle(const std::string& object_id) const {
  const ObjectInstance& obj = object(object_id);
  if (obj.on.empty()) return std::nullopt;
  return obj.on;
}

std::vector<std::string> WorldState::objects_on(const std::string& receptacle_id) const {
  std::vector<std::string> out;
  for (const auto& [id, obj] : objects_) {
    if (obj.on == receptacle_id) out.push_back(id);
  }
  return out;
}

int WorldState::load_of(const std::string& receptacle_id) const {
  int count = 0;
  for (const auto& [id, obj] : objects_) {
    if (obj.on == receptacle_id) ++count;
  }
  return count;
}

std::vector<std::string> WorldState::objects_at(Cell p) const {
  std::vector<std::string> out;
  for (const std::string& rec_id : scene_->receptacles_at(p)) {
    for (const auto& [id, obj] : objects_) {
      if (obj.on == rec_id) out.push_back(id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool WorldState::cell_has_instance(Cell p) const {
  return !scene_->receptacles_at(p).empty();
}

void WorldState::detach(const std::string& object_id) {
  auto it = objects_.find(object_id);
  if (it == objects_.end()) throw ValidationError("unknown object instance: " + object_id);
  it->second.on.clear();
}

void WorldState::attach(const std::string& object_id, const std::string& receptacle_id) {
  auto it = objects_.find(object_id);
  if (it == objects_.end()) throw ValidationError("unknown object instance: " + object_id);
  scene_->receptacle_by_id(receptacle_id);
  it->second.on = receptacle_id;
}

namespace {

// Bresenham cells strictly between a and b.
std::vector<Cell> line_between(Cell a, Cell b) {
  std::vector<Cell> cells;
  int r = a.r, c = a.c;
  const int dr = std::abs(b.r - a.r), dc = std::abs(b.c - a.c);
  const int sr = a.r < b.r ? 1 : -1;
  const int sc = a.c < b.c ? 1 : -1;
  int err = dc - dr;
  while (true) {
    if (r == b.r && c == b.c) break;
    if (!(r == a.r && c == a.c)) cells.push_back({r, c});
    const int e2 = 2 * err;
    if (e2 >= -dr) {
      err -= dr;
      c += sc;
    }
    if (e2 <= dc) {
      err += dc;
      r += sr;
    }
  }
  return cells;
}

bool line_of_sight(const GridScene& scene, Cell from, Cell to) {
  for (Cell p : line_between(from, to)) {
    if (scene.at(p) == CellKind::Obstacle) return false;
  }
  return true;
}

}  // namespace

Observation observe(const GridScene& scene, const WorldState& world,
                    const AgentState& state, int fov_depth) {
  Observation obs;
  const Cell origin = state.pose.cell;
  const int hi = static_cast<int>(state.pose.heading);
  const int fr = kHeadingDr[hi], fc = kHeadingDc[hi];
  // Lateral axis: heading turned right.
  const int ri = (hi + 1) % 4;
  const int lr = kHeadingDr[ri], lc = kHeadingDc[ri];

  std::set<Cell> cells;
  for (int f = 0; f <= fov_depth; ++f) {
    for (int l = -f; l <= f; ++l) {
      const Cell p{origin.r + f * fr + l * lr, origin.c + f * fc + l * lc};
      if (!scene.in_bounds(p)) continue;
      if (line_of_sight(scene, origin, p)) cells.insert(p);
    }
  }
  obs.visible_cells.assign(cells.begin(), cells.end());

  std::set<std::string> seen_ids;
  for (Cell p : obs.visible_cells) {
    for (const std::string& rec_id : scene.receptacles_at(p)) {
      const Receptacle& rec = scene.receptacle_by_id(rec_id);
      if (seen_ids.insert(rec.id).second) {
        obs.visible_instances.push_back({rec.id, rec.category, true, rec.cell});
        obs.receptacle_rooms[rec.id] = scene.room_by_id(rec.room).category;
      }
      for (const std::string& obj_id : world.objects_on(rec_id)) {
        if (seen_ids.insert(obj_id).second) {
          obs.visible_instances.push_back({obj_id, world.object(obj_id).category, false, p});
          obs.on_top.emplace_back(obj_id, rec_id);
        }
      }
    }
  }
  std::sort(obs.visible_instances.begin(), obs.visible_instances.end(),
            [](const InstanceView& a, const InstanceView& b) { return a.id < b.id; });
  std::sort(obs.on_top.begin(), obs.on_top.end());
  return obs;
}

PickPlaceOutcome interact(const GridScene& scene, WorldState& world, AgentState& state,
                          const std::optional<std::string>& target_hint) {
  PickPlaceOutcome out;
  const int range = interact_range(scene);
  Cell hit{-1, -1};
  for (int k = 1; k <= range; ++k) {
    const Cell q = forward_of(state.pose.cell, state.pose.heading, k);
    if (!scene.in_bounds(q) || scene.at(q) == CellKind::Obstacle) return out;  // NoTarget
    if (world.cell_has_instance(q)) {
      hit = q;
      break;
    }
  }
  if (hit.r < 0) return out;  // nothing within range

  if (!state.held) {
    std::vector<std::string> objects = world.objects_at(hit);
    if (objects.empty()) return out;  // bare receptacle, nothing to pick
    std::string chosen = objects.front();
    if (target_hint &&
        std::find(objects.begin(), objects.end(), *target_hint) != objects.end()) {
      chosen = *target_hint;
    }
    out.kind = PickPlaceOutcome::Kind::Picked;
    out.object = chosen;
    out.receptacle = world.on_receptacle(chosen);
    world.detach(chosen);
    state.held = chosen;
    return out;
  }

  const std::vector<std::string>& recs = scene.receptacles_at(hit);
  std::string chosen = recs.front();
  if (target_hint && std::find(recs.begin(), recs.end(), *target_hint) != recs.end()) {
    chosen = *target_hint;
  }
  const Receptacle& rec = scene.receptacle_by_id(chosen);
  out.object = *state.held;
  out.receptacle = chosen;
  if (world.load_of(chosen) >= rec.capacity) {
    out.kind = PickPlaceOutcome::Kind::PlaceFailed;
    return out;
  }
  world.attach(*state.held, chosen);
  state.held.reset();
  out.kind = PickPlaceOutcome::Kind::Placed;
  return out;
}

StepResult step(const GridScene& scene, WorldState& world, const AgentState& state,
                Action action, int max_steps, int fov_depth,
                const std::optional<std::string>& interact_hint) {
  if (state.step_count >= max_steps) {
    throw BudgetExhausted("step budget of " + std::to_string(max_steps) + " exhausted");
  }
  StepResult result;
  AgentState next = state;
  next.last_collision = false;
  switch (action) {
    case Action::Forward: {
      const Cell q = forward_of(state.pose.cell, state.pose.heading);
      if (scene.is_free(q)) {
        next.pose.cell = q;
      } else {
        result.collision = true;
        next.last_collision = true;
      }
      break;
    }
    case Action::TurnLeft:
      next.pose.heading = turn_left(state.pose.heading);
      break;
    case Action::TurnRight:
      next.pose.heading = turn_right(state.pose.heading);
      break;
    case Action::Interact:
      result.interaction = interact(scene, world, next, interact_hint);
      break;
  }
  next.step_count = state.step_count + 1;
  result.obs = observe(scene, world, next, fov_depth);
  result.state = next;
  return result;
}

NavGrid nav_from_scene(const GridScene& scene) {
  NavGrid nav;
  nav.rows = scene.rows;
  nav.cols = scene.cols;
  nav.range = interact_range(scene);
  nav.traversable.assign(scene.grid.size(), 0);
  nav.ray_blocking.assign(scene.grid.size(), 0);
  for (int r = 0; r < scene.rows; ++r) {
    for (int c = 0; c < scene.cols; ++c) {
      const size_t i = static_cast<size_t>(r) * scene.cols + c;
      if (scene.at({r, c}) == CellKind::Free) nav.traversable[i] = 1;
      if (!scene.receptacles_at({r, c}).empty()) nav.ray_blocking[i] = 1;
    }
  }
  return nav;
}

std::vector<Pose> interact_poses(const NavGrid& nav, Cell target) {
  std::vector<Pose> poses;
  for (int h = 0; h < 4; ++h) {
    for (int k = 1; k <= nav.range; ++k) {
      const Cell p{target.r - kHeadingDr[h] * k, target.c - kHeadingDc[h] * k};
      if (!nav.can_walk(p)) continue;
      bool clear = true;
      for (int j = 1; j < k; ++j) {
        const Cell mid{p.r + kHeadingDr[h] * j, p.c + kHeadingDc[h] * j};
        if (nav.blocks_ray(mid)) {
          clear = false;
          break;
        }
      }
      if (clear) poses.push_back({p, static_cast<Heading>(h)});
    }
  }
  std::sort(poses.begin(), poses.end());
  return poses;
}

namespace {

struct PoseSearch {
  std::vector<int> dist;
  std::vector<int> parent;       // previous pose index
  std::vector<Action> via;       // action taken to reach the pose

  static size_t index(const NavGrid& nav, Pose p) {
    return (static_cast<size_t>(p.cell.r) * nav.cols + p.cell.c) * 4 +
           static_cast<size_t>(p.heading);
  }
};

// BFS over (cell, heading); all actions cost 1.
PoseSearch search_from(const NavGrid& nav, Pose start) {
  PoseSearch s;
  const size_t n = static_cast<size_t>(nav.rows) * nav.cols * 4;
  s.dist.assign(n, -1);
  s.parent.assign(n, -1);
  s.via.assign(n, Action::Forward);
  std::deque<Pose> frontier{start};
  s.dist[PoseSearch::index(nav, start)] = 0;
  while (!frontier.empty()) {
    const Pose p = frontier.front();
    frontier.pop_front();
    const size_t pi = PoseSearch::index(nav, p);
    const int d = s.dist[pi];
    auto relax = [&](Pose q, Action a) {
      const size_t qi = PoseSearch::index(nav, q);
      if (s.dist[qi] != -1) return;
      s.dist[qi] = d + 1;
      s.parent[qi] = static_cast<int>(pi);
      s.via[qi] = a;
      frontier.push_back(q);
    };
    const Cell fwd = forward_of(p.cell, p.heading);
    if (nav.can_walk(fwd)) relax({fwd, p.heading}, Action::Forward);
    relax({p.cell, turn_left(p.heading)}, Action::TurnLeft);
    relax({p.cell, turn_right(p.heading)}, Action::TurnRight);
  }
  return s;
}

std::vector<Action> reconstruct(const PoseSearch& s, size_t goal) {
  std::vector<Action> actions;
  size_t cur = goal;
  while (s.parent[cur] != -1) {
    actions.push_back(s.via[cur]);
    cur = static_cast<size_t>(s.parent[cur]);
  }
  std::reverse(actions.begin(), actions.end());
  return actions;
}

}  // namespace

std::vector<int> pose_distances(const NavGrid& nav, Pose start) {
  return search_from(nav, start).dist;
}

std::vector<Action> navigate_to_cell(const NavGrid& nav, Pose start, Cell target) {
  if (!nav.can_walk(target)) throw NoPath("target cell is not known traversable");
  const PoseSearch s = search_from(nav, start);
  int best = -1;
  size_t best_idx = 0;
  for (int h = 0; h < 4; ++h) {
    const size_t i = PoseSearch::index(nav, {target, static_cast<Heading>(h)});
    if (s.dist[i] != -1 && (best == -1 || s.dist[i] < best)) {
      best = s.dist[i];
      best_idx = i;
    }
  }
  if (best == -1) throw NoPath("no path to target cell");
  return reconstruct(s, best_idx);
}

std::vector<Action> navigate_to_instance(const NavGrid& nav, Pose start, Cell target) {
  const std::vector<Pose> goals = interact_poses(nav, target);
  if (goals.empty()) throw NoPath("no reachable pose within interact range of target");
  const PoseSearch s = search_from(nav, start);
  int best = -1;
  size_t best_idx = 0;
  for (const Pose& g : goals) {
    const size_t i = PoseSearch::index(nav, g);
    if (s.dist[i] != -1 && (best == -1 || s.dist[i] < best)) {
      best = s.dist[i];
      best_idx = i;
    }
  }
  if (best == -1) throw NoPath("interact poses exist but are unreachable");
  return reconstruct(s, best_idx);
}

std::string skill_status_name(SkillResult::Status s) {
  switch (s) {
    case SkillResult::Status::Success: return "success";
    case SkillResult::Status::NoPath: return "no_path";
    case SkillResult::Status::TargetLost: return "target_lost";
    case SkillResult::Status::PlaceFailed: return "place_failed";
    case SkillResult::Status::NoTarget: return "no_target";
  }
  return "no_target";
}

namespace {

SkillResult run_skill(const NavGrid& nav, Pose start, const std::string& instance_id,
                      Cell instance_cell, const StepFn& exec, bool picking) {
  SkillResult result;
  std::vector<Action> path;
  try {
    path = navigate_to_instance(nav, start, instance_cell);
  } catch (const NoPath&) {
    result.status = SkillResult::Status::NoPath;
    return result;
  }
  for (Action a : path) {
    exec(a, std::nullopt);
    ++result.actions_spent;
  }
  const StepResult sr = exec(Action::Interact, instance_id);
  ++result.actions_spent;
  const auto& outcome = sr.interaction;
  if (!outcome) {
    result.status = SkillResult::Status::TargetLost;
    return result;
  }
  if (picking) {
    if (outcome->kind == PickPlaceOutcome::Kind::Picked && outcome->object == instance_id) {
      result.status = SkillResult::Status::Success;
      result.receptacle = outcome->receptacle;
    } else {
      result.status = SkillResult::Status::TargetLost;
    }
  } else {
    if (outcome->kind == PickPlaceOutcome::Kind::Placed &&
        outcome->receptacle == instance_id) {
      result.status = SkillResult::Status::Success;
      result.receptacle = outcome->receptacle;
    } else if (outcome->kind == PickPlaceOutcome::Kind::PlaceFailed) {
      result.status = SkillResult::Status::PlaceFailed;
      result.receptacle = outcome->receptacle;
    } else {
      result.status = SkillResult::Status::TargetLost;
    }
  }
  return result;
}

}  // namespace

SkillResult pick_object(const NavGrid& nav, Pose start, const std::string& object_id,
                        Cell object_cell, const StepFn& exec) {
  return run_skill(nav, start, object_id, object_cell, exec, true);
}

SkillResult place_object(const NavGrid& nav, Pose start, const std::string& receptacle_id,
                         Cell receptacle_cell, const StepFn& exec) {
  return run_skill(nav, start, receptacle_id, receptacle_cell, exec, false);
}

}  // namespace housekeep
