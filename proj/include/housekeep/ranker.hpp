#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "housekeep/preferences.hpp"
#include "housekeep/rng.hpp"

namespace housekeep {

// Prompt templates used for scoring and training.
inline constexpr const char* kOrrQueryTemplate = "<object> in <room>";
inline constexpr const char* kOrrKeyTemplate = "<receptacle> of <room>";
inline constexpr const char* kOrQueryTemplate = "<object>";
inline constexpr const char* kOrKeyTemplate = "<room>";

// token -> vector table; dimension inferred from the first line of the file.
class EmbeddingTable {
 public:
  int dim = 0;
  std::map<std::string, std::vector<double>> vectors;
  // When set, prompts are looked up whole (spaces replaced by underscores)
  // instead of being averaged over word tokens.
  bool phrase_mode = false;

  // Fills `tmpl` slots (<object>, <room>, <receptacle>) and embeds the result:
  // mean of word vectors, or a whole-prompt lookup in phrase mode. Missing
  // tokens are skipped; throws OutOfVocabulary when everything is missing.
  std::vector<double> embed_prompt(const std::string& tmpl,
                                   const std::map<std::string, std::string>& slots) const;
};

std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& slots);

EmbeddingTable parse_embeddings(const std::string& text);
EmbeddingTable load_embeddings(const std::string& path);
std::string embeddings_to_text(const EmbeddingTable& table);

// Scorer interface: P(room | object) and P(receptacle | object, room) up to
// normalization. Implementations must be pure functions of their inputs.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual double score_or(const std::string& object, const std::string& room) const = 0;
  virtual double score_orr(const std::string& object, const std::string& room,
                           const std::string& receptacle) const = 0;
};

// Ground-truth preferences: score_orr = c_or; score_or = max c_or over the
// room's receptacles known to the table.
class OracleScores : public ScoreModel {
 public:
  explicit OracleScores(const PreferenceTable& table) : table_(&table) {}
  double score_or(const std::string& object, const std::string& room) const override;
  double score_orr(const std::string& object, const std::string& room,
                   const std::string& receptacle) const override;

 private:
  const PreferenceTable* table_;
};

// Plug-in scorer backed by a JSON map: "object|room|receptacle" -> score and
// "object|room" -> score. Missing keys score 0.
class ExternalScores : public ScoreModel {
 public:
  std::map<std::string, double> scores;
  double score_or(const std::string& object, const std::string& room) const override;
  double score_orr(const std::string& object, const std::string& room,
                   const std::string& receptacle) const override;

  static ExternalScores from_json(const std::string& json_text);
  static ExternalScores load(const std::string& path);
};

// Seeded hash-based uniform scores; the "random ranking" baseline.
class RandomScores : public ScoreModel {
 public:
  explicit RandomScores(uint64_t seed) : seed_(seed) {}
  double score_or(const std::string& object, const std::string& room) const override;
  double score_orr(const std::string& object, const std::string& room,
                   const std::string& receptacle) const override;

 private:
  uint64_t seed_;
};

// 3 linear layers (2 hidden) with ReLU activations; parameters flat for
// optimizer and finite-difference access.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int in_dim, int hidden_dim, int out_dim);

  int in_dim = 0, hidden_dim = 0, out_dim = 0;
  std::vector<double> params;

  size_t param_count() const { return params.size(); }
  void init(Rng& rng);  // scaled uniform init
  std::vector<double> forward(const std::vector<double>& x) const;

  // dL/dx contributions are not needed (inputs are frozen embeddings);
  // accumulates parameter gradients for one sample given dL/dz.
  void backward(const std::vector<double>& x, const std::vector<double>& dz,
                std::vector<double>& grad) const;
};

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 0.01;
  double weight_decay = 0.2;
  int epochs = 1000;
  double tau = 0.07;
  uint64_t seed = 0;
  int hidden_dim = 512;
  int out_dim = 512;
  // Restrict training pairs to these object categories (the seen split);
  // empty trains on every table object.
  std::vector<std::string> train_objects;
};

struct ThresholdCalibration {
  double s_l = 0.5;
  double f1 = 0.0;
  double grid_step = 0.01;
};

// Trained two-tower scorer. Cosine similarities are mapped to [0,1] scores;
// prompt projections are cached (thread-safe) since the model is immutable.
class EmbeddingRanker : public ScoreModel {
 public:
  EmbeddingTable embeddings;
  Mlp or_mlp;
  Mlp orr_mlp;
  double tau = 0.07;
  std::optional<double> calibrated_s_l;

  double score_or(const std::string& object, const std::string& room) const override;
  double score_orr(const std::string& object, const std::string& room,
                   const std::string& receptacle) const override;

  std::string checkpoint_json() const;
  static EmbeddingRanker from_checkpoint(const std::string& json_text,
                                         EmbeddingTable embeddings);
  static EmbeddingRanker load_checkpoint(const std::string& path,
                                         EmbeddingTable embeddings);

 private:
  double cosine_score(const Mlp& mlp, const std::string& query_prompt,
                      const std::vector<double>& query_emb,
                      const std::string& key_prompt,
                      const std::vector<double>& key_emb) const;
  std::vector<double> projected(const Mlp& mlp, const std::string& prompt,
                                const std::vector<double>& emb) const;
  struct Cache {
    std::mutex mutex;
    std::map<std::string, std::vector<double>> entries;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct TrainResult {
  EmbeddingRanker ranker;
  std::vector<double> or_loss;   // per epoch
  std::vector<double> orr_loss;  // per epoch
  double best_or_map = 0.0;
  double best_orr_map = 0.0;
};

// Contrastive-matching training: InfoNCE with in-batch negatives for ORR
// (object-room prompt vs the best-average-rank correct receptacle prompt) and
// BCE for OR (room positive iff it has a correct receptacle for the object).
// Adam with L2-in-gradient weight decay; keeps the checkpoint with the best
// validation mAP per task. Throws NoPositivePairs / DivergenceDetected.
TrainResult train_cm(const EmbeddingTable& embeddings, const PreferenceTable& table,
                     const TrainConfig& config,
                     const PreferenceTable* validation = nullptr);

// Loss + analytic gradient entry points, exposed for gradient verification.
// Pairs are (query embedding, key embedding[, label]). Gradients accumulate
// into `grad` (sized like mlp.params).
double infonce_loss(const Mlp& mlp, const std::vector<std::vector<double>>& queries,
                    const std::vector<std::vector<double>>& keys, double tau,
                    std::vector<double>* grad);
double bce_loss(const Mlp& mlp, const std::vector<std::vector<double>>& queries,
                const std::vector<std::vector<double>>& keys,
                const std::vector<int>& labels, double tau, std::vector<double>* grad);

struct ScoredCandidate {
  std::string room;
  std::string receptacle;
  double probability = 0.0;
};

// Joint probabilities over candidate placements: softmax(score_or / tau) over
// candidate rooms times softmax(score_orr / tau) over each room's candidate
// receptacles. Sorted descending, lexicographic tie-break. Sums to 1.
std::vector<ScoredCandidate> score_joint(
    const ScoreModel& model, const std::string& object,
    const std::vector<std::pair<std::string, std::string>>& candidates,
    double tau = 0.07);

struct RankedPlacements {
  // (room, receptacle, orr score); rooms in descending score_or order, then
  // receptacles in descending score_orr order within each room.
  std::vector<std::tuple<std::string, std::string, double>> correct;    // score > s_l
  std::vector<std::tuple<std::string, std::string, double>> incorrect;  // appended tail
};

RankedPlacements ranked_placements(
    const ScoreModel& model, const std::string& object,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& rooms,
    double s_l);

// Grid search over [0,1] (step 0.01) for the threshold maximizing F1 against
// Correct-class keys; a key counts predicted-correct when score >= s_l so the
// chosen threshold sits strictly above the best-separating score. Ties go to
// the smallest threshold.
ThresholdCalibration calibrate_threshold(const ScoreModel& model,
                                         const PreferenceTable& validation);

struct MapEval {
  double or_map = 0.0;
  double orr_map = 0.0;
  int or_objects = 0;   // objects with at least one positive room
  int orr_objects = 0;  // objects with at least one scored room list
};

// mAP over objects. OR: rank the table's rooms per object, positive iff the
// room has a Correct receptacle. ORR: per (object, room with >=1 Correct key),
// AP over that room's receptacles; per-object mean, then mean over objects.
// Objects with zero positives are skipped.
MapEval eval_map(const ScoreModel& model, const PreferenceTable& table,
                 const std::vector<std::string>& objects = {});

// Average precision of one ranked list; candidates sorted by (score desc,
// name asc) before evaluation.
double average_precision(const std::vector<std::pair<std::string, double>>& scored,
                         const std::vector<std::string>& positives);

}  // namespace housekeep
