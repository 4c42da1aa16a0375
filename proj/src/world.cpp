#include "housekeep/world.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "housekeep/errors.hpp"

namespace housekeep {

using ordered_json = nlohmann::ordered_json;

std::string split_name(Split s) {
  switch (s) {
    case Split::Seen: return "seen";
    case Split::ValUnseen: return "val-unseen";
    case Split::TestUnseen: return "test-unseen";
  }
  return "seen";
}

Split split_from_name(const std::string& name) {
  if (name == "seen") return Split::Seen;
  if (name == "val-unseen") return Split::ValUnseen;
  if (name == "test-unseen") return Split::TestUnseen;
  throw ParseError("unknown split name: " + name);
}

const ObjectCategory* Catalog::find(const std::string& name) const {
  for (const auto& cat : categories) {
    if (cat.name == name) return &cat;
  }
  return nullptr;
}

std::vector<ObjectCategory> Catalog::in_split(Split s) const {
  std::vector<ObjectCategory> out;
  for (const auto& cat : categories) {
    if (cat.split == s) out.push_back(cat);
  }
  return out;
}

const Room& GridScene::room_by_id(const std::string& room_id) const {
  auto it = room_idx_.find(room_id);
  if (it == room_idx_.end()) throw ValidationError("unknown room id: " + room_id);
  return rooms[it->second];
}

const Receptacle& GridScene::receptacle_by_id(const std::string& rec_id) const {
  const Receptacle* rec = find_receptacle(rec_id);
  if (rec == nullptr) throw ValidationError("unknown receptacle id: " + rec_id);
  return *rec;
}

const Receptacle* GridScene::find_receptacle(const std::string& rec_id) const {
  auto it = rec_idx_.find(rec_id);
  return it == rec_idx_.end() ? nullptr : &receptacles[it->second];
}

std::string GridScene::room_category_of_receptacle(const std::string& rec_id) const {
  return room_by_id(receptacle_by_id(rec_id).room).category;
}

const std::vector<std::string>& GridScene::receptacles_at(Cell p) const {
  static const std::vector<std::string> kNone;
  auto it = recs_at_cell_.find(p);
  return it == recs_at_cell_.end() ? kNone : it->second;
}

namespace {

std::string cell_str(Cell p) {
  return "(" + std::to_string(p.r) + "," + std::to_string(p.c) + ")";
}

constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

}  // namespace

void GridScene::validate() {
  if (rows <= 0 || cols <= 0 || grid.size() != static_cast<size_t>(rows) * cols) {
    throw ValidationError("scene '" + id + "': grid dimensions inconsistent");
  }
  if (cell_size_m <= 0.0) {
    throw ValidationError("scene '" + id + "': cell_size_m must be positive");
  }

  room_of_cell_.assign(grid.size(), -1);
  room_idx_.clear();
  rec_idx_.clear();
  recs_at_cell_.clear();

  for (size_t i = 0; i < rooms.size(); ++i) {
    const Room& room = rooms[i];
    if (!room_idx_.emplace(room.id, i).second) {
      throw ValidationError("duplicate room id: " + room.id);
    }
    if (room.cells.empty()) {
      throw ValidationError("room '" + room.id + "' has no cells");
    }
    for (Cell p : room.cells) {
      if (!in_bounds(p)) {
        throw ValidationError("room '" + room.id + "' cell out of bounds " + cell_str(p));
      }
      if (at(p) != CellKind::Free) {
        throw ValidationError("room '" + room.id + "' labels Obstacle cell " + cell_str(p));
      }
      int& slot = room_of_cell_[static_cast<size_t>(p.r) * cols + p.c];
      if (slot != -1) {
        throw ValidationError("cell " + cell_str(p) + " labeled by two rooms");
      }
      slot = static_cast<int>(i);
    }
    // Room cells must be mutually connected (4-connectivity within the room).
    std::map<Cell, bool> seen;
    for (Cell p : room.cells) seen[p] = false;
    std::deque<Cell> frontier{room.cells.front()};
    seen[room.cells.front()] = true;
    size_t reached = 1;
    while (!frontier.empty()) {
      Cell p = frontier.front();
      frontier.pop_front();
      for (int d = 0; d < 4; ++d) {
        Cell q{p.r + kDr[d], p.c + kDc[d]};
        auto it = seen.find(q);
        if (it != seen.end() && !it->second) {
          it->second = true;
          ++reached;
          frontier.push_back(q);
        }
      }
    }
    if (reached != room.cells.size()) {
      throw ValidationError("room '" + room.id + "' cells are not connected");
    }
  }

  // room_of_cell covers exactly the Free cells.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Cell p{r, c};
      const bool labeled = room_of_cell_[static_cast<size_t>(r) * cols + c] != -1;
      if (at(p) == CellKind::Free && !labeled) {
        throw ValidationError("unlabeled free cell " + cell_str(p));
      }
    }
  }

  for (size_t i = 0; i < receptacles.size(); ++i) {
    const Receptacle& rec = receptacles[i];
    if (!rec_idx_.emplace(rec.id, i).second) {
      throw ValidationError("duplicate receptacle id: " + rec.id);
    }
    if (rec.capacity < 1) {
      throw ValidationError("receptacle '" + rec.id + "' capacity must be >= 1");
    }
    if (!in_bounds(rec.cell)) {
      throw ValidationError("receptacle '" + rec.id + "' cell out of bounds " + cell_str(rec.cell));
    }
    if (at(rec.cell) != CellKind::Free) {
      throw ValidationError("receptacle '" + rec.id + "' placed on Obstacle cell " + cell_str(rec.cell));
    }
    auto it = room_idx_.find(rec.room);
    if (it == room_idx_.end()) {
      throw ValidationError("receptacle '" + rec.id + "' references unknown room '" + rec.room + "'");
    }
    if (room_of_cell_[static_cast<size_t>(rec.cell.r) * cols + rec.cell.c] != static_cast<int>(it->second)) {
      throw ValidationError("receptacle '" + rec.id + "' room does not match room_of_cell at " + cell_str(rec.cell));
    }
    bool has_free_neighbor = false;
    for (int d = 0; d < 4; ++d) {
      Cell q{rec.cell.r + kDr[d], rec.cell.c + kDc[d]};
      if (is_free(q)) has_free_neighbor = true;
    }
    if (!has_free_neighbor) {
      throw ValidationError("receptacle '" + rec.id + "' not adjacent-reachable at " + cell_str(rec.cell));
    }
    recs_at_cell_[rec.cell].push_back(rec.id);
  }
  for (auto& [cell, ids] : recs_at_cell_) std::sort(ids.begin(), ids.end());

  // Free cells form one connected component.
  Cell start{-1, -1};
  int free_count = 0;
  for (int r = 0; r < rows && start.r == -1; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (at({r, c}) == CellKind::Free) {
        start = {r, c};
        break;
      }
    }
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (at({r, c}) == CellKind::Free) ++free_count;
    }
  }
  if (free_count == 0) throw ValidationError("scene '" + id + "' has no Free cells");
  std::vector<int> dist = bfs_distances(*this, start);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (at({r, c}) == CellKind::Free && dist[static_cast<size_t>(r) * cols + c] < 0) {
        throw ValidationError("disconnected free space: cell " + cell_str({r, c}) +
                              " unreachable from " + cell_str(start));
      }
    }
  }
}

namespace {

GridScene scene_from_json(const ordered_json& j, const std::string& origin) {
  GridScene scene;
  try {
    scene.id = j.at("id").get<std::string>();
    scene.cell_size_m = j.at("cell_size_m").get<double>();
    const auto& grid = j.at("grid");
    scene.rows = static_cast<int>(grid.size());
    if (scene.rows == 0) throw ParseError(origin + ": empty grid");
    for (const auto& row : grid) {
      const std::string s = row.get<std::string>();
      if (scene.cols == 0) scene.cols = static_cast<int>(s.size());
      if (static_cast<int>(s.size()) != scene.cols) {
        throw ParseError(origin + ": ragged grid rows");
      }
      for (char ch : s) {
        if (ch == '.') {
          scene.grid.push_back(CellKind::Free);
        } else if (ch == '#') {
          scene.grid.push_back(CellKind::Obstacle);
        } else {
          throw ParseError(origin + ": grid character must be '.' or '#', got '" + std::string(1, ch) + "'");
        }
      }
    }
    for (const auto& jr : j.at("rooms")) {
      Room room;
      room.id = jr.at("id").get<std::string>();
      room.category = jr.at("category").get<std::string>();
      for (const auto& jc : jr.at("cells")) {
        room.cells.push_back({jc.at(0).get<int>(), jc.at(1).get<int>()});
      }
      scene.rooms.push_back(std::move(room));
    }
    for (const auto& jr : j.at("receptacles")) {
      Receptacle rec;
      rec.id = jr.at("id").get<std::string>();
      rec.category = jr.at("category").get<std::string>();
      rec.room = jr.at("room").get<std::string>();
      rec.cell = {jr.at("cell").at(0).get<int>(), jr.at("cell").at(1).get<int>()};
      rec.capacity = jr.contains("capacity") ? jr.at("capacity").get<int>() : 4;
      scene.receptacles.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  scene.validate();
  return scene;
}

}  // namespace

GridScene parse_scene(const std::string& json_text, const std::string& origin) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return scene_from_json(j, origin);
}

GridScene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scene file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), path);
}

std::string write_scene(const GridScene& scene) {
  ordered_json j;
  j["id"] = scene.id;
  j["cell_size_m"] = scene.cell_size_m;
  ordered_json grid = ordered_json::array();
  for (int r = 0; r < scene.rows; ++r) {
    std::string row;
    row.reserve(scene.cols);
    for (int c = 0; c < scene.cols; ++c) {
      row.push_back(scene.at({r, c}) == CellKind::Free ? '.' : '#');
    }
    grid.push_back(row);
  }
  j["grid"] = std::move(grid);
  ordered_json rooms = ordered_json::array();
  for (const Room& room : scene.rooms) {
    ordered_json jr;
    jr["id"] = room.id;
    jr["category"] = room.category;
    ordered_json cells = ordered_json::array();
    for (Cell p : room.cells) cells.push_back({p.r, p.c});
    jr["cells"] = std::move(cells);
    rooms.push_back(std::move(jr));
  }
  j["rooms"] = std::move(rooms);
  ordered_json recs = ordered_json::array();
  for (const Receptacle& rec : scene.receptacles) {
    ordered_json jr;
    jr["id"] = rec.id;
    jr["category"] = rec.category;
    jr["room"] = rec.room;
    jr["cell"] = {rec.cell.r, rec.cell.c};
    jr["capacity"] = rec.capacity;
    recs.push_back(std::move(jr));
  }
  j["receptacles"] = std::move(recs);
  return j.dump(2) + "\n";
}

std::vector<int> bfs_distances(const GridScene& scene, Cell from) {
  std::vector<int> dist(scene.grid.size(), -1);
  if (!scene.is_free(from)) return dist;
  std::deque<Cell> frontier{from};
  dist[static_cast<size_t>(from.r) * scene.cols + from.c] = 0;
  while (!frontier.empty()) {
    Cell p = frontier.front();
    frontier.pop_front();
    const int d = dist[static_cast<size_t>(p.r) * scene.cols + p.c];
    for (int k = 0; k < 4; ++k) {
      Cell q{p.r + kDr[k], p.c + kDc[k]};
      if (!scene.is_free(q)) continue;
      int& slot = dist[static_cast<size_t>(q.r) * scene.cols + q.c];
      if (slot == -1) {
        slot = d + 1;
        frontier.push_back(q);
      }
    }
  }
  return dist;
}

std::optional<int> geodesic_distance(const GridScene& scene, Cell from, Cell to) {
  if (!scene.is_free(from)) throw InvalidCell("geodesic_distance: invalid from " + cell_str(from));
  if (!scene.is_free(to)) throw InvalidCell("geodesic_distance: invalid to " + cell_str(to));
  const std::vector<int> dist = bfs_distances(scene, from);
  const int d = dist[static_cast<size_t>(to.r) * scene.cols + to.c];
  if (d < 0) return std::nullopt;
  return d;
}

int navigable_area(const GridScene& scene) {
  int count = 0;
  for (CellKind k : scene.grid) {
    if (k == CellKind::Free) ++count;
  }
  return count;
}

std::string catalog_to_json(const Catalog& catalog) {
  ordered_json j;
  ordered_json cats = ordered_json::array();
  for (const auto& cat : catalog.categories) {
    ordered_json jc;
    jc["name"] = cat.name;
    jc["high_level"] = cat.high_level;
    jc["split"] = split_name(cat.split);
    cats.push_back(std::move(jc));
  }
  j["categories"] = std::move(cats);
  return j.dump(2) + "\n";
}

Catalog catalog_from_json(const std::string& json_text) {
  Catalog catalog;
  try {
    ordered_json j = ordered_json::parse(json_text);
    for (const auto& jc : j.at("categories")) {
      ObjectCategory cat;
      cat.name = jc.at("name").get<std::string>();
      cat.high_level = jc.at("high_level").get<std::string>();
      cat.split = split_from_name(jc.at("split").get<std::string>());
      catalog.categories.push_back(std::move(cat));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("catalog: ") + e.what());
  }
  return catalog;
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open catalog file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return catalog_from_json(ss.str());
}

}  // namespace housekeep
