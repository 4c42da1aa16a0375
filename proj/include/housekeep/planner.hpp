#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "housekeep/episodes.hpp"
#include "housekeep/mapping.hpp"
#include "housekeep/metrics.hpp"
#include "housekeep/ranker.hpp"

namespace housekeep {

enum class Ordering : uint8_t {
  DiscoveryTime,
  ScoreGain,
  AgentObjectDist,
  ObjectReceptacleDist,
};

std::string ordering_name(Ordering o);
Ordering ordering_from_name(const std::string& name);

struct PlannerConfig {
  int n_e = 16;       // exploration burst length
  int max_steps = 0;  // 0 = use the episode's budget
  Ordering ordering = Ordering::DiscoveryTime;
  double s_l = 0.5;
  double tau = 0.07;  // joint softmax temperature
  int fov_depth = kDefaultFovDepth;
  ExploreKind explore = ExploreKind::Frontier;
  bool oracle_explore = false;  // full map granted at t=0
  uint64_t explore_seed = 0;
};

struct PlanItem {
  std::string object;
  std::string target;  // receptacle instance id
  double expected_gain = 0.0;
};

struct RearrangementPlan {
  std::vector<PlanItem> items;
  bool empty() const { return items.empty(); }
};

// Objects whose current receptacle scores at or below s_l and for which a
// discovered above-threshold receptacle with known free capacity exists.
// Target = argmax joint probability; order per config.ordering.
RearrangementPlan pending_rearrangements(
    const AlloMap& map, const ScoreModel& model, double s_l, const PlannerConfig& config,
    Cell agent_cell,
    const std::set<std::pair<std::string, std::string>>& blacklist = {},
    const std::optional<std::string>& held = std::nullopt);

// The full control loop: explore in bursts of n_e steps while nothing is
// pending, otherwise execute rearrangements; hard stop at the step budget.
EpisodeResult run_planner(const GridScene& scene, const Episode& episode,
                          const ScoreModel& model, const PlannerConfig& config);

}  // namespace housekeep
