#include "housekeep/harness.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "housekeep/errors.hpp"
#include "housekeep/log.hpp"
#include "housekeep/rng.hpp"

namespace housekeep {

std::unique_ptr<ScoreModel> make_ranker(const RunConfig& config,
                                        const PreferenceTable& table) {
  if (config.ranker == "oracle") {
    return std::make_unique<OracleScores>(table);
  }
  if (config.ranker == "random") {
    return std::make_unique<RandomScores>(config.seed);
  }
  if (config.ranker == "external") {
    if (config.score_table_path.empty()) {
      throw ValidationError("--ranker external requires --score-table");
    }
    return std::make_unique<ExternalScores>(ExternalScores::load(config.score_table_path));
  }
  if (config.ranker == "embedding") {
    if (config.embeddings_path.empty() || config.checkpoint_path.empty()) {
      throw ValidationError("--ranker embedding requires --embeddings and --checkpoint");
    }
    EmbeddingTable emb = load_embeddings(config.embeddings_path);
    return std::make_unique<EmbeddingRanker>(
        EmbeddingRanker::load_checkpoint(config.checkpoint_path, std::move(emb)));
  }
  throw ValidationError("unknown ranker: " + config.ranker);
}

PlannerConfig planner_config_from(const RunConfig& config, uint64_t episode_seed) {
  PlannerConfig pc;
  pc.n_e = config.n_e;
  pc.max_steps = config.max_steps;
  pc.ordering = ordering_from_name(config.ordering);
  pc.s_l = config.s_l.value_or(0.5);
  if (config.explore == "oracle") {
    pc.oracle_explore = true;
    pc.explore = ExploreKind::Frontier;
  } else if (config.explore == "frontier") {
    pc.explore = ExploreKind::Frontier;
  } else if (config.explore == "random") {
    pc.explore = ExploreKind::Random;
  } else if (config.explore == "forward-right") {
    pc.explore = ExploreKind::ForwardRight;
  } else {
    throw ValidationError("unknown exploration strategy: " + config.explore);
  }
  pc.explore_seed = episode_seed;
  return pc;
}

std::vector<EpisodeResult> run_batch(const GridScene& scene,
                                     const std::vector<Episode>& episodes,
                                     const ScoreModel& model, const RunConfig& config) {
  std::vector<EpisodeResult> results(episodes.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= episodes.size() || failed.load()) break;
      try {
        const PlannerConfig pc = planner_config_from(config, mix_seed(config.seed, i));
        results[i] = run_planner(scene, episodes[i], model, pc);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        error_message = e.what();
        failed.store(true);
        break;
      }
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) throw Error("episode run failed: " + error_message);
  return results;
}

std::string results_to_jsonl(const std::vector<EpisodeResult>& results,
                             bool include_trajectory) {
  std::string out;
  for (const EpisodeResult& r : results) {
    out += result_to_json(r, include_trajectory);
    out += '\n';
  }
  return out;
}

std::vector<EpisodeResult> load_results_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open results file: " + path);
  std::vector<EpisodeResult> results;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    results.push_back(result_from_json(line));
  }
  return results;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

const char* kColumns[] = {"ES", "OS", "SOS", "RQ", "MC", "MOC", "PPE", "steps"};

}  // namespace

std::string render_report_text(
    const std::vector<std::pair<std::string, AggregateReport>>& rows) {
  std::ostringstream out;
  size_t label_width = 5;
  for (const auto& [label, agg] : rows) label_width = std::max(label_width, label.size());
  out << std::string(label_width, ' ') << "    n";
  for (const char* col : kColumns) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "  %14s", col);
    out << buf;
  }
  out << '\n';
  for (const auto& [label, agg] : rows) {
    out << label << std::string(label_width - label.size(), ' ');
    char num[16];
    std::snprintf(num, sizeof num, "  %3d", agg.episodes);
    out << num;
    for (const char* col : kColumns) {
      const MetricStat& s = agg.stats.at(col);
      char buf[40];
      std::snprintf(buf, sizeof buf, "  %7.2f ~%5.2f", s.mean, s.stderr_);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string render_report_csv(
    const std::vector<std::pair<std::string, AggregateReport>>& rows) {
  std::ostringstream out;
  out << "label,n";
  for (const char* col : kColumns) out << ',' << col << "_mean," << col << "_stderr";
  out << '\n';
  for (const auto& [label, agg] : rows) {
    out << label << ',' << agg.episodes;
    for (const char* col : kColumns) {
      const MetricStat& s = agg.stats.at(col);
      char buf[64];
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", s.mean, s.stderr_);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace housekeep
