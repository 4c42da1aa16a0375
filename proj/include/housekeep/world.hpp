#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace housekeep {

struct Cell {
  int r = 0;
  int c = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class CellKind : uint8_t { Free, Obstacle };

enum class Split : uint8_t { Seen, ValUnseen, TestUnseen };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct Room {
  std::string id;
  std::string category;
  std::vector<Cell> cells;
};

struct Receptacle {
  std::string id;
  std::string category;
  std::string room;  // Room::id
  Cell cell;
  int capacity = 4;
};

struct ObjectCategory {
  std::string name;
  std::string high_level;
  Split split = Split::Seen;
};

// Catalog of instantiable objects; splits must partition the categories.
struct Catalog {
  std::vector<ObjectCategory> categories;
  const ObjectCategory* find(const std::string& name) const;
  std::vector<ObjectCategory> in_split(Split s) const;
};

struct ObjectInstance {
  std::string id;
  std::string category;
  std::string on;  // Receptacle::id
};

// Static scene: geometry, rooms and receptacles. Immutable after load;
// shareable read-only across concurrent episode runs.
class GridScene {
 public:
  std::string id;
  double cell_size_m = 0.25;
  int rows = 0;
  int cols = 0;
  std::vector<CellKind> grid;  // row-major
  std::vector<Room> rooms;
  std::vector<Receptacle> receptacles;

  bool in_bounds(Cell p) const {
    return p.r >= 0 && p.r < rows && p.c >= 0 && p.c < cols;
  }
  CellKind at(Cell p) const { return grid[static_cast<size_t>(p.r) * cols + p.c]; }
  bool is_free(Cell p) const { return in_bounds(p) && at(p) == CellKind::Free; }

  // Room index per cell, -1 on Obstacle cells. Built by validate().
  int room_index_at(Cell p) const {
    return room_of_cell_[static_cast<size_t>(p.r) * cols + p.c];
  }
  const Room& room_by_id(const std::string& room_id) const;
  const Receptacle& receptacle_by_id(const std::string& rec_id) const;
  const Receptacle* find_receptacle(const std::string& rec_id) const;
  std::string room_category_of_receptacle(const std::string& rec_id) const;

  // Receptacle ids occupying a cell (usually 0 or 1), sorted by id.
  const std::vector<std::string>& receptacles_at(Cell p) const;

  // Checks all invariants and builds the derived lookup tables; throws
  // ValidationError naming the offending cell or id.
  void validate();

 private:
  std::vector<int> room_of_cell_;
  std::map<std::string, size_t> room_idx_;
  std::map<std::string, size_t> rec_idx_;
  std::map<Cell, std::vector<std::string>> recs_at_cell_;
};

GridScene load_scene(const std::string& path);
GridScene parse_scene(const std::string& json_text, const std::string& origin = "<string>");
// Canonical serialization; load_scene(write_scene(s)) round-trips bit-identically.
std::string write_scene(const GridScene& scene);

// Shortest 4-connected path length in cells; nullopt when unreachable.
// Throws InvalidCell if either endpoint is Obstacle or out of bounds.
std::optional<int> geodesic_distance(const GridScene& scene, Cell from, Cell to);

// BFS layer index from `from` over Free cells; -1 for unreachable/Obstacle.
std::vector<int> bfs_distances(const GridScene& scene, Cell from);

// Count of Free cells (the MC denominator).
int navigable_area(const GridScene& scene);

std::string catalog_to_json(const Catalog& catalog);
Catalog catalog_from_json(const std::string& json_text);
Catalog load_catalog(const std::string& path);

}  // namespace housekeep
