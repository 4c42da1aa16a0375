// Command-line front end: generate episodes, run the agent, train and
// evaluate rankers, inspect annotator agreement, and aggregate reports.

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "housekeep/errors.hpp"
#include "housekeep/harness.hpp"
#include "housekeep/log.hpp"
#include "housekeep/metrics.hpp"
#include "housekeep/planner.hpp"
#include "housekeep/preferences.hpp"
#include "housekeep/ranker.hpp"
#include "housekeep/rng.hpp"
#include "housekeep/synth.hpp"

namespace hk = housekeep;

namespace {

int cmd_gen(const std::string& scene_path, const std::string& prefs_path,
            const std::string& catalog_path, int count, int max_steps, uint64_t seed,
            const std::string& out) {
  const hk::GridScene scene = hk::load_scene(scene_path);
  const hk::PreferenceTable table = hk::load_preferences(prefs_path);
  std::vector<std::string> allowed;
  if (!catalog_path.empty()) {
    for (const auto& cat : hk::load_catalog(catalog_path).categories) {
      allowed.push_back(cat.name);
    }
  }
  std::vector<hk::Episode> episodes;
  for (int i = 0; i < count; ++i) {
    const uint64_t ep_seed = hk::mix_seed(seed, i);
    hk::Rng pick(ep_seed);
    const int n_m = 3 + static_cast<int>(hk::bounded(pick, 3));
    const int total = 7 + static_cast<int>(hk::bounded(pick, 4));
    hk::EpisodeGenOptions opts;
    opts.max_steps = max_steps;
    opts.allowed_categories = allowed;
    hk::Episode ep =
        hk::generate_episode(scene, table, n_m, total - n_m, hk::mix_seed(ep_seed, 1), opts);
    ep.id = "ep" + std::to_string(i);
    episodes.push_back(std::move(ep));
  }
  hk::write_file(out, hk::episodes_to_json(episodes));
  hk::log::info("wrote %zu episodes to %s", episodes.size(), out.c_str());
  return 0;
}

int cmd_run(const hk::RunConfig& config) {
  const hk::GridScene scene = hk::load_scene(config.scene_path);
  const std::vector<hk::Episode> episodes = hk::load_episodes(config.episodes_path);
  const hk::PreferenceTable table = hk::load_preferences(config.prefs_path);
  const auto model = hk::make_ranker(config, table);

  hk::RunConfig effective = config;
  if (!effective.s_l.has_value() && effective.ranker == "embedding") {
    hk::EmbeddingTable emb = hk::load_embeddings(effective.embeddings_path);
    const auto ranker = hk::EmbeddingRanker::load_checkpoint(effective.checkpoint_path,
                                                             std::move(emb));
    if (ranker.calibrated_s_l) effective.s_l = *ranker.calibrated_s_l;
  }

  const std::vector<hk::EpisodeResult> results =
      hk::run_batch(scene, episodes, *model, effective);

  const std::string out_dir = config.out_dir.empty() ? "." : config.out_dir;
  hk::write_file(out_dir + "/results.jsonl", hk::results_to_jsonl(results, false));

  std::vector<hk::MetricsReport> reports;
  reports.reserve(results.size());
  for (const auto& r : results) reports.push_back(hk::compute_metrics(r, table));
  const hk::AggregateReport agg = hk::aggregate(reports);
  const std::string text = hk::render_report_text({{"run", agg}});
  hk::write_file(out_dir + "/summary.txt", text);
  std::fputs(text.c_str(), stdout);

  if (config.write_trajectories) {
    for (const auto& r : results) {
      hk::write_file(out_dir + "/traj_" + r.episode_id + ".jsonl",
                     hk::trajectory_to_jsonl(r));
    }
  }
  return 0;
}

int cmd_train(const std::string& prefs_path, const std::string& embeddings_path,
              const std::string& catalog_path, hk::TrainConfig config,
              const std::string& out) {
  const hk::PreferenceTable table = hk::load_preferences(prefs_path);
  const hk::EmbeddingTable embeddings = hk::load_embeddings(embeddings_path);
  if (!catalog_path.empty()) {
    for (const auto& cat : hk::load_catalog(catalog_path).categories) {
      if (cat.split == hk::Split::Seen) config.train_objects.push_back(cat.name);
    }
  }
  hk::TrainResult result = hk::train_cm(embeddings, table, config);
  const hk::ThresholdCalibration cal = hk::calibrate_threshold(result.ranker, table);
  result.ranker.calibrated_s_l = cal.s_l;
  hk::write_file(out, result.ranker.checkpoint_json());
  hk::log::info("best OR mAP %.4f, ORR mAP %.4f, s_L %.2f (F1 %.4f)", result.best_or_map,
                result.best_orr_map, cal.s_l, cal.f1);
  std::printf("trained checkpoint: %s (OR mAP %.4f, ORR mAP %.4f, s_L %.2f)\n",
              out.c_str(), result.best_or_map, result.best_orr_map, cal.s_l);
  return 0;
}

int cmd_eval_ranker(const hk::RunConfig& config, const std::string& catalog_path,
                    const std::string& out) {
  const hk::PreferenceTable table = hk::load_preferences(config.prefs_path);
  const auto model = hk::make_ranker(config, table);

  std::map<std::string, std::vector<std::string>> splits;
  if (catalog_path.empty()) {
    splits["all"] = {};
  } else {
    const hk::Catalog catalog = hk::load_catalog(catalog_path);
    for (const auto& cat : catalog.categories) {
      splits[hk::split_name(cat.split)].push_back(cat.name);
    }
  }
  std::string text = "split,objects_or,objects_orr,or_map,orr_map\n";
  for (const auto& [name, objects] : splits) {
    const hk::MapEval eval = hk::eval_map(*model, table, objects);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f\n", name.c_str(), eval.or_objects,
                  eval.orr_objects, eval.or_map, eval.orr_map);
    text += buf;
  }
  if (!out.empty()) hk::write_file(out, text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int cmd_agreement(const std::string& prefs_path, int keep_k, const std::string& out) {
  std::vector<hk::AnnotationRecord> annotations = hk::load_annotations_csv(prefs_path);
  if (keep_k > 0) annotations = hk::filter_top_agreement(annotations, keep_k);
  std::string text = "mode,kappa\n";
  for (const auto& [label, mode] :
       {std::pair{"three-way", hk::KappaMode::ThreeWay},
        std::pair{"merged-binary", hk::KappaMode::MergedBinary}}) {
    char buf[64];
    try {
      const double kappa = hk::fleiss_kappa(annotations, mode);
      std::snprintf(buf, sizeof buf, "%s,%.6f\n", label, kappa);
    } catch (const hk::DegenerateAgreement&) {
      std::snprintf(buf, sizeof buf, "%s,undefined\n", label);
    }
    text += buf;
  }
  if (!out.empty()) hk::write_file(out, text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int cmd_report(const std::vector<std::string>& result_paths, const std::string& prefs_path,
               const std::string& out) {
  const hk::PreferenceTable table = hk::load_preferences(prefs_path);
  std::vector<std::pair<std::string, hk::AggregateReport>> rows;
  for (const std::string& path : result_paths) {
    const std::vector<hk::EpisodeResult> results = hk::load_results_jsonl(path);
    std::vector<hk::MetricsReport> reports;
    reports.reserve(results.size());
    for (const auto& r : results) reports.push_back(hk::compute_metrics(r, table));
    const std::filesystem::path p(path);
    std::string label = p.stem().string();
    if (label == "results" && p.has_parent_path()) {
      label = p.parent_path().filename().string();
    }
    rows.emplace_back(std::move(label), hk::aggregate(reports));
  }
  const std::string text = hk::render_report_text(rows);
  std::fputs(text.c_str(), stdout);
  if (!out.empty()) {
    hk::write_file(out + ".txt", text);
    hk::write_file(out + ".csv", hk::render_report_csv(rows));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale rearrangement simulator and agent harness"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate episodes for a scene");
  std::string scene_path, prefs_path, catalog_path, out_path;
  int count = 20, max_steps = 1000;
  uint64_t seed = 0;
  gen->add_option("--scene", scene_path, "scene JSON")->required();
  gen->add_option("--prefs", prefs_path, "annotation CSV or preference table JSON")->required();
  gen->add_option("--catalog", catalog_path, "object catalog JSON (restricts categories)");
  gen->add_option("--count", count, "episodes to generate");
  gen->add_option("--max-steps", max_steps, "step budget per episode");
  gen->add_option("--seed", seed, "rng seed");
  gen->add_option("--out", out_path, "output episode file")->required();

  // run
  auto* run = app.add_subcommand("run", "run the agent over an episode file");
  hk::RunConfig rc;
  double sl_flag = -1.0;
  run->add_option("--scene", rc.scene_path, "scene JSON")->required();
  run->add_option("--episodes", rc.episodes_path, "episode file")->required();
  run->add_option("--prefs", rc.prefs_path, "annotation CSV or preference table JSON")
      ->required();
  run->add_option("--embeddings", rc.embeddings_path, "embedding text file");
  run->add_option("--checkpoint", rc.checkpoint_path, "trained ranker checkpoint");
  run->add_option("--score-table", rc.score_table_path, "external score table JSON");
  run->add_option("--ranker", rc.ranker, "oracle|embedding|external|random");
  run->add_option("--explore", rc.explore, "frontier|random|forward-right|oracle");
  run->add_option("--order", rc.ordering,
                  "discovery-time|score-gain|agent-object-dist|object-receptacle-dist");
  run->add_option("--ne", rc.n_e, "exploration burst length");
  run->add_option("--max-steps", rc.max_steps, "step budget override");
  run->add_option("--sl", sl_flag, "score threshold s_L (default 0.5 or checkpoint)");
  run->add_option("--seed", rc.seed, "rng seed");
  run->add_option("--jobs", rc.jobs, "parallel episode workers");
  run->add_option("--out", rc.out_dir, "output directory")->required();
  run->add_flag("--traj", rc.write_trajectories, "write per-episode trajectory logs");

  // train-ranker
  auto* train = app.add_subcommand("train-ranker", "train the contrastive-matching ranker");
  hk::TrainConfig tc;
  std::string ckpt_out;
  train->add_option("--prefs", prefs_path, "annotation CSV or preference table JSON")
      ->required();
  train->add_option("--embeddings", rc.embeddings_path, "embedding text file")->required();
  train->add_option("--catalog", catalog_path, "catalog JSON (restricts training to seen split)");
  train->add_option("--epochs", tc.epochs, "training epochs");
  train->add_option("--batch-size", tc.batch_size, "batch size");
  train->add_option("--lr", tc.learning_rate, "learning rate");
  train->add_option("--weight-decay", tc.weight_decay, "weight decay");
  train->add_option("--tau", tc.tau, "contrastive temperature");
  train->add_option("--hidden", tc.hidden_dim, "MLP hidden width");
  train->add_option("--out-dim", tc.out_dim, "MLP output width");
  train->add_option("--seed", tc.seed, "rng seed");
  train->add_option("--out", ckpt_out, "checkpoint output path")->required();

  // eval-ranker
  auto* eval = app.add_subcommand("eval-ranker", "mAP evaluation of a ranker");
  hk::RunConfig ec;
  std::string eval_out;
  eval->add_option("--prefs", ec.prefs_path, "annotation CSV or preference table JSON")
      ->required();
  eval->add_option("--embeddings", ec.embeddings_path, "embedding text file");
  eval->add_option("--checkpoint", ec.checkpoint_path, "trained ranker checkpoint");
  eval->add_option("--score-table", ec.score_table_path, "external score table JSON");
  eval->add_option("--ranker", ec.ranker, "oracle|embedding|external|random");
  eval->add_option("--catalog", catalog_path, "catalog JSON (per-split evaluation)");
  eval->add_option("--seed", ec.seed, "seed for the random ranker");
  eval->add_option("--out", eval_out, "output CSV path");

  // agreement
  auto* agree = app.add_subcommand("agreement", "Fleiss' kappa over an annotation CSV");
  std::string agree_prefs, agree_out;
  int keep_k = 0;
  agree->add_option("--prefs", agree_prefs, "annotation CSV")->required();
  agree->add_option("--keep-k", keep_k, "pre-filter: keep k highest-agreement annotators");
  agree->add_option("--out", agree_out, "output CSV path");

  // report
  auto* report = app.add_subcommand("report", "aggregate result files into a table");
  std::vector<std::string> result_paths;
  std::string report_prefs, report_out;
  report->add_option("results", result_paths, "results.jsonl files")->required();
  report->add_option("--prefs", report_prefs, "annotation CSV or preference table JSON")
      ->required();
  report->add_option("--out", report_out, "output path prefix (.txt/.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen(scene_path, prefs_path, catalog_path, count, max_steps, seed, out_path);
    }
    if (run->parsed()) {
      if (sl_flag >= 0.0) rc.s_l = sl_flag;
      return cmd_run(rc);
    }
    if (train->parsed()) {
      return cmd_train(prefs_path, rc.embeddings_path, catalog_path, tc, ckpt_out);
    }
    if (eval->parsed()) {
      return cmd_eval_ranker(ec, catalog_path, eval_out);
    }
    if (agree->parsed()) {
      return cmd_agreement(agree_prefs, keep_k, agree_out);
    }
    if (report->parsed()) {
      return cmd_report(result_paths, report_prefs, report_out);
    }
  } catch (const hk::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
