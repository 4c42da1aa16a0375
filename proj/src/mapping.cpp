#include "housekeep/mapping.hpp"

#include <algorithm>
#include <deque>

#include "housekeep/errors.hpp"

namespace housekeep {

namespace {

constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

}  // namespace

AlloMap::AlloMap(int rows, int cols)
    : rows_(rows), cols_(cols),
      status_(static_cast<size_t>(rows) * cols, MapCell::Unknown) {}

AlloMap AlloMap::full_knowledge(const GridScene& scene, const WorldState& world) {
  AlloMap map(scene.rows, scene.cols);
  for (int r = 0; r < scene.rows; ++r) {
    for (int c = 0; c < scene.cols; ++c) {
      map.status_[static_cast<size_t>(r) * scene.cols + c] =
          scene.at({r, c}) == CellKind::Free ? MapCell::Free : MapCell::Obstacle;
    }
  }
  for (const Receptacle& rec : scene.receptacles) {
    map.receptacles_[rec.id] = {rec.cell, rec.category,
                                scene.room_by_id(rec.room).category, rec.capacity};
  }
  for (const auto& [id, obj] : world.objects()) {
    DiscoveredObject d;
    d.category = obj.category;
    d.on = obj.on.empty() ? std::nullopt : std::optional<std::string>(obj.on);
    d.t_discovered = 0;
    map.objects_[id] = d;
  }
  return map;
}

void AlloMap::update(const GridScene& scene, const Observation& obs, int t) {
  for (Cell p : obs.visible_cells) {
    status_[static_cast<size_t>(p.r) * cols_ + p.c] =
        scene.at(p) == CellKind::Free ? MapCell::Free : MapCell::Obstacle;
  }
  for (const InstanceView& view : obs.visible_instances) {
    if (view.is_receptacle) {
      DiscoveredReceptacle rec;
      rec.cell = view.cell;
      rec.category = view.category;
      rec.room_category = obs.receptacle_rooms.at(view.id);
      rec.capacity = scene.receptacle_by_id(view.id).capacity;
      receptacles_[view.id] = rec;
    } else {
      auto it = objects_.find(view.id);
      if (it == objects_.end()) {
        objects_[view.id] = {view.category, std::nullopt, t};
      }
    }
  }
  for (const auto& [obj_id, rec_id] : obs.on_top) {
    objects_[obj_id].on = rec_id;
  }
}

void AlloMap::note_picked(const std::string& object_id) {
  auto it = objects_.find(object_id);
  if (it != objects_.end()) it->second.on.reset();
}

void AlloMap::note_placed(const std::string& object_id, const std::string& receptacle_id) {
  auto it = objects_.find(object_id);
  if (it != objects_.end()) it->second.on = receptacle_id;
}

int AlloMap::explored_free_cells() const {
  int count = 0;
  for (MapCell s : status_) {
    if (s == MapCell::Free) ++count;
  }
  return count;
}

int AlloMap::known_load(const std::string& receptacle_id) const {
  int count = 0;
  for (const auto& [id, obj] : objects_) {
    if (obj.on == receptacle_id) ++count;
  }
  return count;
}

NavGrid AlloMap::nav_view(int range) const {
  NavGrid nav;
  nav.rows = rows_;
  nav.cols = cols_;
  nav.range = range;
  nav.traversable.assign(status_.size(), 0);
  nav.ray_blocking.assign(status_.size(), 0);
  for (size_t i = 0; i < status_.size(); ++i) {
    if (status_[i] == MapCell::Free) nav.traversable[i] = 1;
  }
  for (const auto& [id, rec] : receptacles_) {
    nav.ray_blocking[static_cast<size_t>(rec.cell.r) * cols_ + rec.cell.c] = 1;
  }
  return nav;
}

std::string AlloMap::dump_text() const {
  std::string out;
  out.reserve(static_cast<size_t>(rows_) * (cols_ + 1));
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      switch (status({r, c})) {
        case MapCell::Unknown: out.push_back('?'); break;
        case MapCell::Free: out.push_back('.'); break;
        case MapCell::Obstacle: out.push_back('#'); break;
      }
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<Cell> frontiers(const AlloMap& map, Cell agent) {
  // BFS over known-Free cells for distance ordering.
  std::vector<int> dist(static_cast<size_t>(map.rows()) * map.cols(), -1);
  if (map.in_bounds(agent) && map.status(agent) == MapCell::Free) {
    std::deque<Cell> frontier{agent};
    dist[static_cast<size_t>(agent.r) * map.cols() + agent.c] = 0;
    while (!frontier.empty()) {
      Cell p = frontier.front();
      frontier.pop_front();
      const int d = dist[static_cast<size_t>(p.r) * map.cols() + p.c];
      for (int k = 0; k < 4; ++k) {
        Cell q{p.r + kDr[k], p.c + kDc[k]};
        if (!map.in_bounds(q) || map.status(q) != MapCell::Free) continue;
        int& slot = dist[static_cast<size_t>(q.r) * map.cols() + q.c];
        if (slot == -1) {
          slot = d + 1;
          frontier.push_back(q);
        }
      }
    }
  }

  struct Entry {
    int dist;
    Cell cell;
  };
  std::vector<Entry> reachable;
  std::vector<Cell> unreachable;
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      const Cell p{r, c};
      if (map.status(p) != MapCell::Free) continue;
      bool edge = false;
      for (int k = 0; k < 4 && !edge; ++k) {
        const Cell q{r + kDr[k], c + kDc[k]};
        if (map.in_bounds(q) && map.status(q) == MapCell::Unknown) edge = true;
      }
      if (!edge) continue;
      const int d = dist[static_cast<size_t>(r) * map.cols() + c];
      if (d >= 0) {
        reachable.push_back({d, p});
      } else {
        unreachable.push_back(p);
      }
    }
  }
  std::sort(reachable.begin(), reachable.end(), [](const Entry& a, const Entry& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.cell < b.cell;  // row-major
  });
  std::vector<Cell> out;
  out.reserve(reachable.size() + unreachable.size());
  for (const Entry& e : reachable) out.push_back(e.cell);
  for (Cell p : unreachable) out.push_back(p);
  return out;
}

namespace {

Action frontier_action(const AlloMap& map, const AgentState& state, int range) {
  const std::vector<Cell> all = frontiers(map, state.pose.cell);
  const NavGrid nav = map.nav_view(range);
  for (Cell target : all) {
    if (target == state.pose.cell) {
      // Standing on the frontier: rotate toward an Unknown 4-neighbor.
      for (int k = 0; k < 4; ++k) {
        const Heading h = static_cast<Heading>(k);
        const Cell q = forward_of(state.pose.cell, h);
        if (!map.in_bounds(q) || map.status(q) != MapCell::Unknown) continue;
        const int cur = static_cast<int>(state.pose.heading);
        const int want = k;
        const int delta = (want - cur + 4) % 4;
        if (delta == 0) continue;  // facing it; it will be observed this step
        return delta == 3 ? Action::TurnLeft : Action::TurnRight;
      }
      continue;
    }
    try {
      const std::vector<Action> path = navigate_to_cell(nav, state.pose, target);
      if (!path.empty()) return path.front();
    } catch (const NoPath&) {
      continue;
    }
  }
  throw ExplorationExhausted{};
}

}  // namespace

Action explore_step(ExplorationStrategy& strategy, const AlloMap& map,
                    const AgentState& state, int interact_range) {
  switch (strategy.kind) {
    case ExploreKind::Frontier:
      return frontier_action(map, state, interact_range);
    case ExploreKind::Random: {
      static const Action kMoves[3] = {Action::Forward, Action::TurnLeft, Action::TurnRight};
      return kMoves[bounded(strategy.rng, 3)];
    }
    case ExploreKind::ForwardRight:
      return state.last_collision ? Action::TurnRight : Action::Forward;
  }
  return Action::Forward;
}

}  // namespace housekeep
