#include "housekeep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "housekeep/rng.hpp"

namespace housekeep::synth {

GridScene make_scene(const SceneConfig& config) {
  GridScene scene;
  scene.id = config.id;
  scene.cell_size_m = 0.25;
  const int rh = config.room_height, rw = config.room_width;
  scene.rows = config.room_rows * (rh + 1) + 1;
  scene.cols = config.room_cols * (rw + 1) + 1;
  scene.grid.assign(static_cast<size_t>(scene.rows) * scene.cols, CellKind::Obstacle);

  auto set_free = [&](int r, int c) {
    scene.grid[static_cast<size_t>(r) * scene.cols + c] = CellKind::Free;
  };

  Rng rng(mix_seed(config.seed, fnv1a64(config.id)));

  // Room interiors.
  for (int rr = 0; rr < config.room_rows; ++rr) {
    for (int rc = 0; rc < config.room_cols; ++rc) {
      const int top = rr * (rh + 1) + 1;
      const int left = rc * (rw + 1) + 1;
      Room room;
      room.id = "room_" + std::to_string(rr) + "_" + std::to_string(rc);
      const size_t cat_idx = (static_cast<size_t>(rr) * config.room_cols + rc) %
                             config.room_categories.size();
      room.category = config.room_categories[cat_idx];
      for (int r = top; r < top + rh; ++r) {
        for (int c = left; c < left + rw; ++c) {
          set_free(r, c);
          room.cells.push_back({r, c});
        }
      }
      scene.rooms.push_back(std::move(room));
    }
  }

  // Doorways in shared walls; the doorway cell joins the north/west room.
  for (int rr = 0; rr < config.room_rows; ++rr) {
    for (int rc = 0; rc < config.room_cols; ++rc) {
      const int top = rr * (rh + 1) + 1;
      const int left = rc * (rw + 1) + 1;
      Room& room = scene.rooms[static_cast<size_t>(rr) * config.room_cols + rc];
      if (rc + 1 < config.room_cols) {  // wall to the east
        const int wall_c = left + rw;
        const int door_r = top + 1 + static_cast<int>(bounded(rng, rh - 2));
        set_free(door_r, wall_c);
        room.cells.push_back({door_r, wall_c});
      }
      if (rr + 1 < config.room_rows) {  // wall to the south
        const int wall_r = top + rh;
        const int door_c = left + 1 + static_cast<int>(bounded(rng, rw - 2));
        set_free(wall_r, door_c);
        room.cells.push_back({wall_r, door_c});
      }
    }
  }

  // Receptacles along each room's top and bottom interior rows. The same room
  // category always carries the same receptacle categories so preferences are
  // keyed consistently across scenes.
  std::set<Cell> used_cells;
  for (size_t ri = 0; ri < scene.rooms.size(); ++ri) {
    const Room& room = scene.rooms[ri];
    const size_t room_cat_idx =
        std::find(config.room_categories.begin(), config.room_categories.end(),
                  room.category) -
        config.room_categories.begin();
    const int rr = static_cast<int>(ri) / config.room_cols;
    const int rc = static_cast<int>(ri) % config.room_cols;
    const int top = rr * (rh + 1) + 1;
    const int left = rc * (rw + 1) + 1;
    for (int j = 0; j < config.receptacles_per_room; ++j) {
      Receptacle rec;
      rec.id = "rec_" + std::to_string(rr) + "_" + std::to_string(rc) + "_" +
               std::to_string(j);
      rec.category = config.receptacle_categories[
          (room_cat_idx * config.receptacles_per_room + j) %
          config.receptacle_categories.size()];
      rec.room = room.id;
      const int r = j % 2 == 0 ? top : top + rh - 1;
      const int c = left + 1 + (j / 2) * 3 % std::max(1, rw - 2);
      rec.cell = {r, std::min(c, left + rw - 2)};
      rec.capacity = config.capacity;
      // Nudge off collisions with an existing receptacle cell.
      while (used_cells.count(rec.cell) > 0) rec.cell.c += 1;
      used_cells.insert(rec.cell);
      scene.receptacles.push_back(rec);
    }
  }

  scene.validate();
  return scene;
}

Catalog make_catalog(const CatalogConfig& config) {
  Catalog catalog;
  for (size_t g = 0; g < config.groups.size(); ++g) {
    Split split = Split::TestUnseen;
    if (static_cast<int>(g) < config.seen_groups) {
      split = Split::Seen;
    } else if (static_cast<int>(g) < config.seen_groups + config.val_unseen_groups) {
      split = Split::ValUnseen;
    }
    for (int i = 0; i < config.per_group; ++i) {
      ObjectCategory cat;
      cat.name = config.groups[g] + std::to_string(i);
      cat.high_level = config.groups[g];
      cat.split = split;
      catalog.categories.push_back(std::move(cat));
    }
  }
  return catalog;
}

SceneVocabulary vocabulary_of(const std::vector<GridScene>& scenes) {
  std::map<std::string, std::set<std::string>> by_room;
  for (const GridScene& scene : scenes) {
    for (const Receptacle& rec : scene.receptacles) {
      by_room[scene.room_by_id(rec.room).category].insert(rec.category);
    }
  }
  SceneVocabulary vocab;
  for (const auto& [room, recs] : by_room) {
    vocab.emplace_back(room, std::vector<std::string>(recs.begin(), recs.end()));
  }
  return vocab;
}

namespace {

std::vector<double> random_unit(Rng& rng, int dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  for (int i = 0; i < dim; ++i) {
    // Box-Muller from our own uniform source.
    const double u1 = std::max(real01(rng), 1e-12);
    const double u2 = real01(rng);
    v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    norm += v[i] * v[i];
  }
  norm = std::sqrt(std::max(norm, 1e-12));
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

EmbeddingTable make_structured_embeddings(const PreferenceTable& table, int dim,
                                          double jitter, uint64_t seed) {
  EmbeddingTable emb;
  emb.dim = dim;

  std::set<std::string> rooms, recs, objects;
  for (const auto& [key, entry] : table.entries) {
    objects.insert(key.object);
    rooms.insert(key.room);
    recs.insert(key.receptacle);
  }
  auto vec_for = [&](const std::string& token, uint64_t salt) {
    Rng rng(mix_seed(seed, mix_seed(fnv1a64(token), salt)));
    return random_unit(rng, dim);
  };
  for (const std::string& r : rooms) emb.vectors[r] = vec_for(r, 1);
  for (const std::string& c : recs) emb.vectors[c] = vec_for(c, 2);

  for (const std::string& o : objects) {
    std::vector<double> v(dim, 0.0);
    int n = 0;
    for (const auto& [key, entry] : table.entries) {
      if (key.object != o || entry.c_or <= 0.5) continue;
      const auto& vr = emb.vectors.at(key.room);
      const auto& vc = emb.vectors.at(key.receptacle);
      for (int i = 0; i < dim; ++i) v[i] += 0.5 * (vr[i] + vc[i]);
      ++n;
    }
    Rng rng(mix_seed(seed, mix_seed(fnv1a64(o), 3)));
    const std::vector<double> noise = random_unit(rng, dim);
    if (n == 0) {
      v = noise;
    } else {
      for (int i = 0; i < dim; ++i) v[i] = v[i] / n + jitter * noise[i];
    }
    emb.vectors[o] = v;
  }

  // Template filler words, scaled down so they don't dominate prompt means.
  for (const std::string& filler : {std::string("in"), std::string("of")}) {
    std::vector<double> v = vec_for(filler, 4);
    for (double& x : v) x *= 0.2;
    emb.vectors[filler] = v;
  }
  return emb;
}

}  // namespace housekeep::synth
