#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "housekeep/world.hpp"

namespace housekeep {

enum class Bin : uint8_t { Correct, Misplaced, Implausible };

std::string bin_name(Bin b);
Bin bin_from_name(const std::string& name);

// One annotator's classification of a receptacle category for an
// (object, room) context. rank is present iff bin is Correct or Misplaced;
// ranks within one (annotator, object, room, bin) group run 1..k gap-free.
struct AnnotationRecord {
  std::string annotator;
  std::string object;      // object category
  std::string room;        // room category
  std::string receptacle;  // receptacle category
  Bin bin = Bin::Implausible;
  std::optional<int> rank;
};

struct PrefKey {
  std::string object;
  std::string room;
  std::string receptacle;
  auto operator<=>(const PrefKey&) const = default;
};

struct PrefEntry {
  double c_or = 0.0;
  double m_or = 0.0;
  double i_or = 0.0;
  std::optional<double> mean_correct_rank;
  int n_annotators = 0;
};

enum class PlacementClass : uint8_t { Correct, Misplaced, Neutral };

// Aggregated vote ratios per (object, room, receptacle) category triple.
// Immutable after aggregation; shareable read-only.
class PreferenceTable {
 public:
  std::map<PrefKey, PrefEntry> entries;

  const PrefEntry& at(const PrefKey& key) const;  // throws MissingKey
  const PrefEntry* find(const PrefKey& key) const;

  // c ratio for a key, 0 when the key is absent.
  double c_or(const std::string& object, const std::string& room,
              const std::string& receptacle) const;
  double m_or(const std::string& object, const std::string& room,
              const std::string& receptacle) const;

  PlacementClass classify(const std::string& object, const std::string& room,
                          const std::string& receptacle) const;  // throws MissingKey

  // Correct keys for an object across all rooms, sorted ascending by
  // mean_correct_rank with (room, receptacle) lexicographic tie-break.
  std::vector<PrefKey> correct_keys_ranked(const std::string& object) const;

  // 1-based position of (room, receptacle) in correct_keys_ranked.
  // Throws NotCorrect when the key is not classified Correct.
  int correct_rank(const std::string& object, const std::string& room,
                   const std::string& receptacle) const;

  std::vector<std::string> object_categories() const;
  std::vector<std::string> rooms_for_object(const std::string& object) const;
  std::vector<std::string> receptacles_for(const std::string& object,
                                           const std::string& room) const;
};

// Vote aggregation; ratios are per-key over that key's annotator count.
// Throws DuplicateClassification / UnknownCategory (when a catalog is given).
PreferenceTable aggregate(const std::vector<AnnotationRecord>& annotations,
                          const Catalog* catalog = nullptr);

enum class KappaMode : uint8_t {
  ThreeWay,      // Correct / Misplaced / Implausible
  MergedBinary,  // Correct vs (Misplaced + Implausible)
};

// Fleiss' kappa over items = (object, room, receptacle) triples.
// Every item must be rated by the same number n >= 2 of annotators.
double fleiss_kappa(const std::vector<AnnotationRecord>& annotations, KappaMode mode);

// Keeps, per (object, room) group, the keep_k annotators whose bin votes agree
// most with the per-receptacle majority; drops the rest.
std::vector<AnnotationRecord> filter_top_agreement(
    const std::vector<AnnotationRecord>& annotations, int keep_k);

struct SynthPrefConfig {
  int annotators = 10;
  // Probability an annotator votes the designated bin; otherwise uniform.
  double agreement = 0.9;
  // Force a clear majority on each object's designated correct/misplaced
  // keys so episode generation always has material to work with. Turn off
  // to study pure agreement statistics.
  bool ensure_majorities = true;
};

// (room category, receptacle categories available in it) — the vocabulary a
// synthetic annotator classifies against.
using SceneVocabulary = std::vector<std::pair<std::string, std::vector<std::string>>>;

// Deterministic synthetic stand-in for a crowd-sourced preference study.
std::vector<AnnotationRecord> synth_preferences(const Catalog& catalog,
                                                const SceneVocabulary& vocab,
                                                uint64_t seed,
                                                const SynthPrefConfig& config = {});

// CSV with header: annotator,object,room,receptacle,bin,rank
std::vector<AnnotationRecord> parse_annotations_csv(const std::string& text);
std::vector<AnnotationRecord> load_annotations_csv(const std::string& path);
std::string annotations_to_csv(const std::vector<AnnotationRecord>& annotations);

std::string preference_table_to_json(const PreferenceTable& table);
PreferenceTable preference_table_from_json(const std::string& json_text);

// Loads either an annotation CSV (aggregated on the fly) or a table JSON,
// keyed off the file contents.
PreferenceTable load_preferences(const std::string& path);

}  // namespace housekeep
