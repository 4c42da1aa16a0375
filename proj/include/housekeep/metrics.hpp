#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "housekeep/embodiment.hpp"
#include "housekeep/episodes.hpp"
#include "housekeep/preferences.hpp"

namespace housekeep {

struct TrajRecord {
  int t = 0;
  Action action = Action::Forward;
  Pose pose;
  std::optional<std::string> held;
  bool collision = false;
  std::optional<PickPlaceOutcome> interaction;
};

struct PlanEvent {
  int t = 0;
  std::string event;  // plan | explore | pick | place
  std::string detail;
};

struct InteractionRecord {
  int t = 0;
  std::string object;
  bool pick = false;  // false = place
  std::string receptacle;
};

// Everything the metrics need, self-contained: the episode fragment, the
// per-receptacle category context and the run outcome. Serializing and
// re-reading this reproduces every metric bit-identically.
struct EpisodeResult {
  std::string episode_id;
  std::string scene_id;
  int max_steps = 0;
  int navigable_cells = 0;

  // receptacle id -> (room category, receptacle category)
  std::map<std::string, std::pair<std::string, std::string>> receptacle_context;
  std::map<std::string, std::string> object_categories;        // id -> category
  std::map<std::string, std::string> initial_placements;       // id -> receptacle
  std::set<std::string> misplaced_ids;                         // O_m

  std::vector<TrajRecord> trajectory;
  std::vector<PlanEvent> events;
  std::vector<InteractionRecord> interactions;  // successful picks/places
  std::map<std::string, std::optional<std::string>> final_placements;  // nullopt = held
  std::map<std::string, int> discovered_misplaced;  // id -> discovery step
  int explored_free_cells = 0;
  int steps_used = 0;
};

struct MetricsReport {
  double es = 0.0;   // {0,1}
  double os = 0.0;   // [0,1]
  double sos = 0.0;  // [0,1]
  double rq = 0.0;   // [0,1]
  double mc = 0.0;   // [0,100] %
  double moc = 0.0;  // [0,1]
  double ppe = 0.0;  // [0,1]
  int steps = 0;
};

struct ObjectSets {
  std::set<std::string> initially_misplaced;  // O_m
  std::set<std::string> interacted;           // O_i
  std::set<std::string> either;               // O_mi
};

ObjectSets object_sets(const EpisodeResult& result);

// c_{o, phi(o)} for the final placement; 0 when held or the key is missing.
double final_correct_ratio(const EpisodeResult& result, const PreferenceTable& table,
                           const std::string& object_id);

double episode_success(const EpisodeResult& result, const PreferenceTable& table);
double object_success(const EpisodeResult& result, const PreferenceTable& table);
double soft_object_success(const EpisodeResult& result, const PreferenceTable& table);
double rearrange_quality(const EpisodeResult& result, const PreferenceTable& table);
double map_coverage(const EpisodeResult& result);
double misplaced_object_coverage(const EpisodeResult& result);
double pick_place_efficiency(const EpisodeResult& result, const PreferenceTable& table);

MetricsReport compute_metrics(const EpisodeResult& result, const PreferenceTable& table);

// Completed rearrangements (successful places) in execution order, with
// whether each left its object on a Correct-class receptacle.
std::vector<std::pair<std::string, bool>> rearrangement_outcomes(
    const EpisodeResult& result, const PreferenceTable& table);

// Over episodes with at least K executed rearrangements: fraction whose first
// K rearrangements all left their objects Correct. nullopt when no episode
// reaches K rearrangements.
std::optional<double> es_at_k(const std::vector<EpisodeResult>& results,
                              const PreferenceTable& table, int k);

struct MetricStat {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample stddev / sqrt(n)
};

struct AggregateReport {
  int episodes = 0;
  std::map<std::string, MetricStat> stats;  // keyed ES, OS, SOS, RQ, MC, MOC, PPE, steps
};

AggregateReport aggregate(const std::vector<MetricsReport>& reports);  // throws EmptySet

std::string metrics_to_json(const MetricsReport& report);

// JSON round trip for one result line (JSON-lines friendly: no newlines).
std::string result_to_json(const EpisodeResult& result, bool include_trajectory);
EpisodeResult result_from_json(const std::string& json_text);

std::string trajectory_to_jsonl(const EpisodeResult& result);

}  // namespace housekeep
