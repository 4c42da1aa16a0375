#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "housekeep/embodiment.hpp"
#include "housekeep/rng.hpp"
#include "housekeep/world.hpp"

namespace housekeep {

enum class MapCell : uint8_t { Unknown, Free, Obstacle };

struct DiscoveredReceptacle {
  Cell cell;
  std::string category;
  std::string room_category;
  int capacity = 4;
};

struct DiscoveredObject {
  std::string category;
  std::optional<std::string> on;  // receptacle id; nullopt while held by the agent
  int t_discovered = 0;
};

// Allocentric map accumulated from egocentric observations. Cell status never
// reverts to Unknown and discovered entries are never deleted.
class AlloMap {
 public:
  AlloMap() = default;
  AlloMap(int rows, int cols);

  // Full ground-truth map at t=0 (oracle exploration).
  static AlloMap full_knowledge(const GridScene& scene, const WorldState& world);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  MapCell status(Cell p) const {
    return status_[static_cast<size_t>(p.r) * cols_ + p.c];
  }
  bool in_bounds(Cell p) const { return p.r >= 0 && p.r < rows_ && p.c >= 0 && p.c < cols_; }

  const std::map<std::string, DiscoveredReceptacle>& receptacles() const {
    return receptacles_;
  }
  const std::map<std::string, DiscoveredObject>& objects() const { return objects_; }

  // Folds one observation in. `t` is the step index of the observation.
  void update(const GridScene& scene, const Observation& obs, int t);

  // The agent knows the effect of its own pick/place without re-observing.
  void note_picked(const std::string& object_id);
  void note_placed(const std::string& object_id, const std::string& receptacle_id);

  int explored_free_cells() const;
  int known_load(const std::string& receptacle_id) const;

  NavGrid nav_view(int interact_range) const;

  // Row-major text dump: '?' unknown, '.' free, '#' obstacle.
  std::string dump_text() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<MapCell> status_;
  std::map<std::string, DiscoveredReceptacle> receptacles_;
  std::map<std::string, DiscoveredObject> objects_;
};

// Known-Free cells 4-adjacent to at least one Unknown cell, sorted by BFS
// action-free geodesic distance from the agent cell (row-major tie-break);
// unreachable frontiers trail the list in row-major order.
std::vector<Cell> frontiers(const AlloMap& map, Cell agent);

enum class ExploreKind : uint8_t { Frontier, Random, ForwardRight };

struct ExplorationStrategy {
  ExploreKind kind = ExploreKind::Frontier;
  Rng rng{0};

  explicit ExplorationStrategy(ExploreKind k = ExploreKind::Frontier, uint64_t seed = 0)
      : kind(k), rng(seed) {}
};

// Thrown value-free: exploration has nothing left to do.
struct ExplorationExhausted {};

// Next exploration action. Frontier navigates to the nearest frontier,
// replanning every call; Random picks uniformly among movement actions;
// ForwardRight goes forward until a collision, then turns right.
// Throws ExplorationExhausted when no reachable frontier remains (Frontier).
Action explore_step(ExplorationStrategy& strategy, const AlloMap& map,
                    const AgentState& state, int interact_range);

}  // namespace housekeep
