// Writes a self-consistent synthetic fixture set: scenes, an object catalog,
// annotation CSV, and structured embeddings. Useful for demos and tests.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "housekeep/harness.hpp"
#include "housekeep/preferences.hpp"
#include "housekeep/synth.hpp"

namespace hk = housekeep;

int main(int argc, char** argv) {
  CLI::App app{"synthetic fixture generator"};
  std::string out_dir = "data";
  int scenes = 3;
  int annotators = 10;
  double agreement = 0.9;
  int embedding_dim = 32;
  uint64_t seed = 7;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--scenes", scenes, "number of scenes");
  app.add_option("--annotators", annotators, "annotators per object-room pair");
  app.add_option("--agreement", agreement, "annotator agreement level in [0,1]");
  app.add_option("--dim", embedding_dim, "embedding dimension");
  app.add_option("--seed", seed, "rng seed");
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<hk::GridScene> scene_list;
    for (int i = 0; i < scenes; ++i) {
      hk::synth::SceneConfig sc;
      sc.id = "scene" + std::to_string(i);
      sc.seed = seed + i;
      sc.room_rows = 2;
      sc.room_cols = 2 + i % 2;
      hk::GridScene scene = hk::synth::make_scene(sc);
      hk::write_file(out_dir + "/" + sc.id + ".json", hk::write_scene(scene));
      scene_list.push_back(std::move(scene));
    }

    const hk::Catalog catalog = hk::synth::make_catalog({});
    hk::write_file(out_dir + "/catalog.json", hk::catalog_to_json(catalog));

    hk::SynthPrefConfig pc;
    pc.annotators = annotators;
    pc.agreement = agreement;
    const auto annotations = hk::synth_preferences(
        catalog, hk::synth::vocabulary_of(scene_list), seed, pc);
    hk::write_file(out_dir + "/annotations.csv", hk::annotations_to_csv(annotations));

    const hk::PreferenceTable table = hk::aggregate(annotations);
    hk::write_file(out_dir + "/preferences.json", hk::preference_table_to_json(table));

    const hk::EmbeddingTable emb =
        hk::synth::make_structured_embeddings(table, embedding_dim, 0.05, seed);
    hk::write_file(out_dir + "/embeddings.txt", hk::embeddings_to_text(emb));

    std::printf("fixtures written to %s/\n", out_dir.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
