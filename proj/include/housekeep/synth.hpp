#pragma once

#include <string>
#include <vector>

#include "housekeep/preferences.hpp"
#include "housekeep/ranker.hpp"
#include "housekeep/world.hpp"

namespace housekeep::synth {

// Rectangular rooms on a grid with doorways in the shared walls and
// receptacles along the room interiors.
struct SceneConfig {
  std::string id = "scene";
  int room_rows = 2;
  int room_cols = 2;
  int room_height = 7;  // interior cells
  int room_width = 9;
  int receptacles_per_room = 3;
  int capacity = 10;
  std::vector<std::string> room_categories = {
      "kitchen", "bedroom", "living_room", "bathroom", "garage", "office"};
  std::vector<std::string> receptacle_categories = {
      "counter", "shelf",  "sink",   "bed",   "dresser", "nightstand",
      "sofa",    "tvstand", "table", "tub",   "vanity",  "hamper",
      "workbench", "toolrack", "bin", "desk", "bookcase", "cabinet"};
  uint64_t seed = 0;
};

GridScene make_scene(const SceneConfig& config);

struct CatalogConfig {
  std::vector<std::string> groups = {"food", "crockery", "toy",
                                     "stationery", "tool", "apparel"};
  int per_group = 5;
  int seen_groups = 3;        // first k groups -> seen split
  int val_unseen_groups = 1;  // next k -> val-unseen; remainder test-unseen
};

// Category names are single tokens (e.g. "food0") so embeddings can key them
// directly.
Catalog make_catalog(const CatalogConfig& config);

// Distinct (room category, receptacle categories) pairs across scenes.
SceneVocabulary vocabulary_of(const std::vector<GridScene>& scenes);

// Token vectors whose geometry mirrors the preference table: room and
// receptacle tokens are random unit directions; each object token is the mean
// of its Correct (room + receptacle) directions plus jitter. Template filler
// words get small vectors so prompts stay fully in-vocabulary.
EmbeddingTable make_structured_embeddings(const PreferenceTable& table, int dim,
                                          double jitter, uint64_t seed);

}  // namespace housekeep::synth
