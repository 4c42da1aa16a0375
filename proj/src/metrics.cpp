#include "housekeep/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "housekeep/errors.hpp"

namespace housekeep {

using ordered_json = nlohmann::ordered_json;

ObjectSets object_sets(const EpisodeResult& result) {
  ObjectSets sets;
  sets.initially_misplaced = result.misplaced_ids;
  for (const InteractionRecord& rec : result.interactions) {
    sets.interacted.insert(rec.object);
  }
  sets.either = sets.initially_misplaced;
  sets.either.insert(sets.interacted.begin(), sets.interacted.end());
  return sets;
}

namespace {

double ratio_for(const EpisodeResult& result, const PreferenceTable& table,
                 const std::string& object_id, const std::string& receptacle_id) {
  auto ctx = result.receptacle_context.find(receptacle_id);
  if (ctx == result.receptacle_context.end()) return 0.0;
  const auto& [room_cat, rec_cat] = ctx->second;
  return table.c_or(result.object_categories.at(object_id), room_cat, rec_cat);
}

}  // namespace

double final_correct_ratio(const EpisodeResult& result, const PreferenceTable& table,
                           const std::string& object_id) {
  auto it = result.final_placements.find(object_id);
  if (it == result.final_placements.end() || !it->second.has_value()) return 0.0;
  return ratio_for(result, table, object_id, *it->second);
}

double episode_success(const EpisodeResult& result, const PreferenceTable& table) {
  for (const auto& [id, category] : result.object_categories) {
    if (final_correct_ratio(result, table, id) <= 0.5) return 0.0;
  }
  return 1.0;
}

double object_success(const EpisodeResult& result, const PreferenceTable& table) {
  const ObjectSets sets = object_sets(result);
  if (sets.either.empty()) return 1.0;
  double sum = 0.0;
  for (const std::string& id : sets.either) {
    sum += final_correct_ratio(result, table, id) > 0.5 ? 1.0 : 0.0;
  }
  return sum / static_cast<double>(sets.either.size());
}

double soft_object_success(const EpisodeResult& result, const PreferenceTable& table) {
  const ObjectSets sets = object_sets(result);
  if (sets.either.empty()) return 1.0;
  double sum = 0.0;
  for (const std::string& id : sets.either) {
    sum += final_correct_ratio(result, table, id);
  }
  return sum / static_cast<double>(sets.either.size());
}

double rearrange_quality(const EpisodeResult& result, const PreferenceTable& table) {
  const ObjectSets sets = object_sets(result);
  if (sets.either.empty()) return 1.0;
  double sum = 0.0;
  for (const std::string& id : sets.either) {
    const auto it = result.final_placements.find(id);
    if (it == result.final_placements.end() || !it->second.has_value()) continue;
    if (ratio_for(result, table, id, *it->second) <= 0.5) continue;
    const auto& [room_cat, rec_cat] = result.receptacle_context.at(*it->second);
    const int rank =
        table.correct_rank(result.object_categories.at(id), room_cat, rec_cat);
    sum += 1.0 / static_cast<double>(rank);
  }
  return sum / static_cast<double>(sets.either.size());
}

double map_coverage(const EpisodeResult& result) {
  if (result.navigable_cells <= 0) return 0.0;
  return 100.0 * static_cast<double>(result.explored_free_cells) /
         static_cast<double>(result.navigable_cells);
}

double misplaced_object_coverage(const EpisodeResult& result) {
  if (result.misplaced_ids.empty()) return 1.0;
  int discovered = 0;
  for (const std::string& id : result.misplaced_ids) {
    if (result.discovered_misplaced.count(id) > 0) ++discovered;
  }
  return static_cast<double>(discovered) / static_cast<double>(result.misplaced_ids.size());
}

double pick_place_efficiency(const EpisodeResult& result, const PreferenceTable& table) {
  const ObjectSets sets = object_sets(result);
  if (sets.interacted.empty()) return 1.0;
  std::map<std::string, int> interactions_of;
  for (const InteractionRecord& rec : result.interactions) {
    ++interactions_of[rec.object];
  }
  double sum = 0.0;
  for (const std::string& id : sets.interacted) {
    if (final_correct_ratio(result, table, id) <= 0.5) continue;
    // Minimum interactions: one pick + one place for initially misplaced
    // objects, zero for objects that started out correct.
    const double n_min = sets.initially_misplaced.count(id) > 0 ? 2.0 : 0.0;
    const double n = static_cast<double>(interactions_of.at(id));
    sum += n_min / n;
  }
  return sum / static_cast<double>(sets.interacted.size());
}

MetricsReport compute_metrics(const EpisodeResult& result, const PreferenceTable& table) {
  MetricsReport report;
  report.es = episode_success(result, table);
  report.os = object_success(result, table);
  report.sos = soft_object_success(result, table);
  report.rq = rearrange_quality(result, table);
  report.mc = map_coverage(result);
  report.moc = misplaced_object_coverage(result);
  report.ppe = pick_place_efficiency(result, table);
  report.steps = result.steps_used;
  return report;
}

std::vector<std::pair<std::string, bool>> rearrangement_outcomes(
    const EpisodeResult& result, const PreferenceTable& table) {
  std::vector<std::pair<std::string, bool>> outcomes;
  for (const InteractionRecord& rec : result.interactions) {
    if (rec.pick) continue;
    outcomes.emplace_back(rec.object,
                          ratio_for(result, table, rec.object, rec.receptacle) > 0.5);
  }
  return outcomes;
}

std::optional<double> es_at_k(const std::vector<EpisodeResult>& results,
                              const PreferenceTable& table, int k) {
  int eligible = 0;
  int success = 0;
  for (const EpisodeResult& result : results) {
    const auto outcomes = rearrangement_outcomes(result, table);
    if (static_cast<int>(outcomes.size()) < k) continue;
    ++eligible;
    bool all = true;
    for (int i = 0; i < k; ++i) {
      if (!outcomes[i].second) {
        all = false;
        break;
      }
    }
    if (all) ++success;
  }
  if (eligible == 0) return std::nullopt;
  return static_cast<double>(success) / static_cast<double>(eligible);
}

AggregateReport aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw EmptySet("cannot aggregate an empty report set");
  AggregateReport agg;
  agg.episodes = static_cast<int>(reports.size());
  auto stat_of = [&](auto getter) {
    double mean = 0.0;
    for (const MetricsReport& r : reports) mean += getter(r);
    mean /= static_cast<double>(reports.size());
    double var = 0.0;
    if (reports.size() > 1) {
      for (const MetricsReport& r : reports) {
        const double d = getter(r) - mean;
        var += d * d;
      }
      var /= static_cast<double>(reports.size() - 1);
    }
    MetricStat s;
    s.mean = mean;
    s.stderr_ = std::sqrt(var) / std::sqrt(static_cast<double>(reports.size()));
    return s;
  };
  agg.stats["ES"] = stat_of([](const MetricsReport& r) { return r.es; });
  agg.stats["OS"] = stat_of([](const MetricsReport& r) { return r.os; });
  agg.stats["SOS"] = stat_of([](const MetricsReport& r) { return r.sos; });
  agg.stats["RQ"] = stat_of([](const MetricsReport& r) { return r.rq; });
  agg.stats["MC"] = stat_of([](const MetricsReport& r) { return r.mc; });
  agg.stats["MOC"] = stat_of([](const MetricsReport& r) { return r.moc; });
  agg.stats["PPE"] = stat_of([](const MetricsReport& r) { return r.ppe; });
  agg.stats["steps"] = stat_of([](const MetricsReport& r) { return static_cast<double>(r.steps); });
  return agg;
}

std::string metrics_to_json(const MetricsReport& report) {
  ordered_json j;
  j["ES"] = report.es;
  j["OS"] = report.os;
  j["SOS"] = report.sos;
  j["RQ"] = report.rq;
  j["MC"] = report.mc;
  j["MOC"] = report.moc;
  j["PPE"] = report.ppe;
  j["steps"] = report.steps;
  return j.dump();
}

namespace {

ordered_json pose_to_json(const Pose& pose) {
  return {{"cell", {pose.cell.r, pose.cell.c}}, {"heading", heading_name(pose.heading)}};
}

Pose pose_from_json(const ordered_json& j) {
  Pose pose;
  pose.cell = {j.at("cell").at(0).get<int>(), j.at("cell").at(1).get<int>()};
  pose.heading = heading_from_name(j.at("heading").get<std::string>());
  return pose;
}

ordered_json outcome_to_json(const PickPlaceOutcome& o) {
  ordered_json j;
  switch (o.kind) {
    case PickPlaceOutcome::Kind::Picked: j["kind"] = "picked"; break;
    case PickPlaceOutcome::Kind::Placed: j["kind"] = "placed"; break;
    case PickPlaceOutcome::Kind::PlaceFailed: j["kind"] = "place_failed"; break;
    case PickPlaceOutcome::Kind::NoTarget: j["kind"] = "no_target"; break;
  }
  j["object"] = o.object ? ordered_json(*o.object) : ordered_json(nullptr);
  j["receptacle"] = o.receptacle ? ordered_json(*o.receptacle) : ordered_json(nullptr);
  return j;
}

PickPlaceOutcome outcome_from_json(const ordered_json& j) {
  PickPlaceOutcome o;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "picked") o.kind = PickPlaceOutcome::Kind::Picked;
  else if (kind == "placed") o.kind = PickPlaceOutcome::Kind::Placed;
  else if (kind == "place_failed") o.kind = PickPlaceOutcome::Kind::PlaceFailed;
  else o.kind = PickPlaceOutcome::Kind::NoTarget;
  if (!j.at("object").is_null()) o.object = j.at("object").get<std::string>();
  if (!j.at("receptacle").is_null()) o.receptacle = j.at("receptacle").get<std::string>();
  return o;
}

ordered_json traj_record_to_json(const TrajRecord& rec) {
  ordered_json j;
  j["t"] = rec.t;
  j["action"] = action_name(rec.action);
  j["pose"] = pose_to_json(rec.pose);
  j["held"] = rec.held ? ordered_json(*rec.held) : ordered_json(nullptr);
  j["collision"] = rec.collision;
  j["interaction"] = rec.interaction ? outcome_to_json(*rec.interaction) : ordered_json(nullptr);
  return j;
}

}  // namespace

std::string result_to_json(const EpisodeResult& result, bool include_trajectory) {
  ordered_json j;
  j["episode_id"] = result.episode_id;
  j["scene_id"] = result.scene_id;
  j["max_steps"] = result.max_steps;
  j["navigable_cells"] = result.navigable_cells;

  ordered_json recs = ordered_json::object();
  for (const auto& [id, ctx] : result.receptacle_context) {
    recs[id] = {ctx.first, ctx.second};
  }
  j["receptacle_context"] = std::move(recs);

  ordered_json objs = ordered_json::array();
  for (const auto& [id, category] : result.object_categories) {
    ordered_json jo;
    jo["id"] = id;
    jo["category"] = category;
    jo["initial"] = result.initial_placements.at(id);
    jo["misplaced"] = result.misplaced_ids.count(id) > 0;
    const auto& fin = result.final_placements.at(id);
    jo["final"] = fin ? ordered_json(*fin) : ordered_json(nullptr);
    objs.push_back(std::move(jo));
  }
  j["objects"] = std::move(objs);

  ordered_json inter = ordered_json::array();
  for (const InteractionRecord& rec : result.interactions) {
    inter.push_back({{"t", rec.t},
                     {"object", rec.object},
                     {"kind", rec.pick ? "pick" : "place"},
                     {"receptacle", rec.receptacle}});
  }
  j["interactions"] = std::move(inter);

  ordered_json disc = ordered_json::object();
  for (const auto& [id, t] : result.discovered_misplaced) disc[id] = t;
  j["discovered_misplaced"] = std::move(disc);

  j["explored_free_cells"] = result.explored_free_cells;
  j["steps_used"] = result.steps_used;

  if (include_trajectory) {
    ordered_json traj = ordered_json::array();
    for (const TrajRecord& rec : result.trajectory) traj.push_back(traj_record_to_json(rec));
    j["trajectory"] = std::move(traj);
    ordered_json events = ordered_json::array();
    for (const PlanEvent& ev : result.events) {
      events.push_back({{"t", ev.t}, {"event", ev.event}, {"detail", ev.detail}});
    }
    j["events"] = std::move(events);
  }
  return j.dump();
}

EpisodeResult result_from_json(const std::string& json_text) {
  EpisodeResult result;
  try {
    ordered_json j = ordered_json::parse(json_text);
    result.episode_id = j.at("episode_id").get<std::string>();
    result.scene_id = j.at("scene_id").get<std::string>();
    result.max_steps = j.at("max_steps").get<int>();
    result.navigable_cells = j.at("navigable_cells").get<int>();
    for (auto it = j.at("receptacle_context").begin(); it != j.at("receptacle_context").end(); ++it) {
      result.receptacle_context[it.key()] = {it.value().at(0).get<std::string>(),
                                             it.value().at(1).get<std::string>()};
    }
    for (const auto& jo : j.at("objects")) {
      const std::string id = jo.at("id").get<std::string>();
      result.object_categories[id] = jo.at("category").get<std::string>();
      result.initial_placements[id] = jo.at("initial").get<std::string>();
      if (jo.at("misplaced").get<bool>()) result.misplaced_ids.insert(id);
      if (jo.at("final").is_null()) {
        result.final_placements[id] = std::nullopt;
      } else {
        result.final_placements[id] = jo.at("final").get<std::string>();
      }
    }
    for (const auto& ji : j.at("interactions")) {
      InteractionRecord rec;
      rec.t = ji.at("t").get<int>();
      rec.object = ji.at("object").get<std::string>();
      rec.pick = ji.at("kind").get<std::string>() == "pick";
      rec.receptacle = ji.at("receptacle").get<std::string>();
      result.interactions.push_back(std::move(rec));
    }
    for (auto it = j.at("discovered_misplaced").begin();
         it != j.at("discovered_misplaced").end(); ++it) {
      result.discovered_misplaced[it.key()] = it.value().get<int>();
    }
    result.explored_free_cells = j.at("explored_free_cells").get<int>();
    result.steps_used = j.at("steps_used").get<int>();
    if (j.contains("trajectory")) {
      for (const auto& jt : j.at("trajectory")) {
        TrajRecord rec;
        rec.t = jt.at("t").get<int>();
        rec.action = action_from_name(jt.at("action").get<std::string>());
        rec.pose = pose_from_json(jt.at("pose"));
        if (!jt.at("held").is_null()) rec.held = jt.at("held").get<std::string>();
        rec.collision = jt.at("collision").get<bool>();
        if (!jt.at("interaction").is_null()) {
          rec.interaction = outcome_from_json(jt.at("interaction"));
        }
        result.trajectory.push_back(std::move(rec));
      }
      for (const auto& je : j.at("events")) {
        result.events.push_back({je.at("t").get<int>(), je.at("event").get<std::string>(),
                                 je.at("detail").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("episode result: ") + e.what());
  }
  return result;
}

std::string trajectory_to_jsonl(const EpisodeResult& result) {
  std::string out;
  size_t ei = 0;
  for (const TrajRecord& rec : result.trajectory) {
    // Interleave planner events at their timestamps, before the step record.
    while (ei < result.events.size() && result.events[ei].t <= rec.t) {
      const PlanEvent& ev = result.events[ei++];
      ordered_json j{{"t", ev.t}, {"event", ev.event}, {"detail", ev.detail}};
      out += j.dump();
      out += '\n';
    }
    out += traj_record_to_json(rec).dump();
    out += '\n';
  }
  for (; ei < result.events.size(); ++ei) {
    const PlanEvent& ev = result.events[ei];
    ordered_json j{{"t", ev.t}, {"event", ev.event}, {"detail", ev.detail}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace housekeep
