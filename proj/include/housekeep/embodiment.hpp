#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "housekeep/world.hpp"

namespace housekeep {

enum class Heading : uint8_t { N, E, S, W };
enum class Action : uint8_t { Forward, TurnLeft, TurnRight, Interact };

std::string heading_name(Heading h);
Heading heading_from_name(const std::string& name);
std::string action_name(Action a);
Action action_from_name(const std::string& name);

Cell forward_of(Cell p, Heading h, int k = 1);
Heading turn_left(Heading h);
Heading turn_right(Heading h);

struct Pose {
  Cell cell;
  Heading heading = Heading::N;
  auto operator<=>(const Pose&) const = default;
};

struct AgentState {
  Pose pose;
  std::optional<std::string> held;
  int step_count = 0;
  bool last_collision = false;
};

// Default FoV cone depth: 12 cells = 3 m at 0.25 m/cell.
inline constexpr int kDefaultFovDepth = 12;

// Interact ray range in cells for a scene (1.5 m).
int interact_range(const GridScene& scene);

// Mutable object placements for one episode run. An object is on exactly one
// receptacle or held by the agent, never both.
class WorldState {
 public:
  WorldState(const GridScene& scene, const std::vector<ObjectInstance>& objects);

  const GridScene& scene() const { return *scene_; }
  const std::map<std::string, ObjectInstance>& objects() const { return objects_; }
  const ObjectInstance& object(const std::string& id) const;

  // Receptacle the object rests on; nullopt while held.
  std::optional<std::string> on_receptacle(const std::string& object_id) const;
  // Object ids on a receptacle, sorted.
  std::vector<std::string> objects_on(const std::string& receptacle_id) const;
  int load_of(const std::string& receptacle_id) const;

  // Object ids resting on a cell (via its receptacles), sorted.
  std::vector<std::string> objects_at(Cell p) const;
  bool cell_has_instance(Cell p) const;

  void detach(const std::string& object_id);  // object becomes held
  void attach(const std::string& object_id, const std::string& receptacle_id);

  int total_objects() const { return static_cast<int>(objects_.size()); }

 private:
  const GridScene* scene_;
  std::map<std::string, ObjectInstance> objects_;  // "" in `on` means held
};

struct InstanceView {
  std::string id;
  std::string category;
  bool is_receptacle = false;
  Cell cell;
};

struct Observation {
  std::vector<Cell> visible_cells;  // sorted
  std::vector<InstanceView> visible_instances;  // sorted by id
  std::vector<std::pair<std::string, std::string>> on_top;  // (object, receptacle)
  std::map<std::string, std::string> receptacle_rooms;      // receptacle -> room category
};

struct PickPlaceOutcome {
  enum class Kind : uint8_t { Picked, Placed, PlaceFailed, NoTarget };
  Kind kind = Kind::NoTarget;
  std::optional<std::string> object;
  std::optional<std::string> receptacle;
};

struct StepResult {
  AgentState state;
  Observation obs;
  bool collision = false;
  std::optional<PickPlaceOutcome> interaction;
};

// 90-degree FoV cone of the given depth with Bresenham line-of-sight;
// obstacles block sight beyond themselves but are visible at the wall.
Observation observe(const GridScene& scene, const WorldState& world,
                    const AgentState& state, int fov_depth = kDefaultFovDepth);

// Magic pointer: ray up to interact_range cells along the heading, stopping at
// the first instance-bearing or Obstacle cell. Empty-handed + object there ->
// picked; holding + receptacle with free capacity -> placed; else no-op.
// target_hint selects among multiple objects on the hit cell.
PickPlaceOutcome interact(const GridScene& scene, WorldState& world, AgentState& state,
                          const std::optional<std::string>& target_hint = std::nullopt);

// One environment step. Throws BudgetExhausted when step_count == max_steps.
// interact_hint disambiguates the pointer target when several instances share
// the hit cell; it has no effect on other actions.
StepResult step(const GridScene& scene, WorldState& world, const AgentState& state,
                Action action, int max_steps, int fov_depth = kDefaultFovDepth,
                const std::optional<std::string>& interact_hint = std::nullopt);

// What the navigation planner believes about the world; built either from the
// ground-truth scene (oracle) or from an AlloMap.
struct NavGrid {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> traversable;  // known Free
  std::vector<uint8_t> ray_blocking; // known instance-bearing cell
  int range = 6;                     // interact ray range in cells

  bool in_bounds(Cell p) const { return p.r >= 0 && p.r < rows && p.c >= 0 && p.c < cols; }
  bool can_walk(Cell p) const {
    return in_bounds(p) && traversable[static_cast<size_t>(p.r) * cols + p.c] != 0;
  }
  // Anything unknown or out of bounds conservatively blocks the ray.
  bool blocks_ray(Cell p) const {
    if (!in_bounds(p)) return true;
    const size_t i = static_cast<size_t>(p.r) * cols + p.c;
    return ray_blocking[i] != 0 || traversable[i] == 0;
  }
};

NavGrid nav_from_scene(const GridScene& scene);

// Poses from which the interact ray hits `target` first. Pose cells must be
// walkable; all strictly-between cells must be ray-clear.
std::vector<Pose> interact_poses(const NavGrid& nav, Cell target);

// Shortest action sequence over (cell, heading) states; Forward and turns each
// cost 1. Goal: reach `target` cell (any heading). Throws NoPath.
std::vector<Action> navigate_to_cell(const NavGrid& nav, Pose start, Cell target);

// Goal: end within interact range of and facing the instance at `target`.
// Returns the empty sequence when the start pose already qualifies.
std::vector<Action> navigate_to_instance(const NavGrid& nav, Pose start, Cell target);

// BFS action-distance from start to every (cell, heading); -1 unreachable.
// Index: (r * cols + c) * 4 + heading.
std::vector<int> pose_distances(const NavGrid& nav, Pose start);

// Executes one action against the live environment; throws BudgetExhausted.
using StepFn = std::function<StepResult(Action, const std::optional<std::string>& hint)>;

struct SkillResult {
  enum class Status : uint8_t { Success, NoPath, TargetLost, PlaceFailed, NoTarget };
  Status status = Status::Success;
  int actions_spent = 0;
  std::optional<std::string> receptacle;  // pick: source; place: destination
};

std::string skill_status_name(SkillResult::Status s);

// Navigate into range of the mapped object cell and pick it via the pointer.
SkillResult pick_object(const NavGrid& nav, Pose start, const std::string& object_id,
                        Cell object_cell, const StepFn& exec);

// Navigate into range of the mapped receptacle cell and place the held object.
SkillResult place_object(const NavGrid& nav, Pose start, const std::string& receptacle_id,
                         Cell receptacle_cell, const StepFn& exec);

}  // namespace housekeep
