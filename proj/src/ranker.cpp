#include "housekeep/ranker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "housekeep/errors.hpp"
#include "housekeep/log.hpp"

namespace housekeep {

using ordered_json = nlohmann::ordered_json;

std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& slots) {
  std::string out = tmpl;
  for (const auto& [name, value] : slots) {
    const std::string placeholder = "<" + name + ">";
    size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
      out.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  }
  return out;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ' || ch == '_' || ch == '\t') {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

}  // namespace

std::vector<double> EmbeddingTable::embed_prompt(
    const std::string& tmpl, const std::map<std::string, std::string>& slots) const {
  const std::string prompt = fill_template(tmpl, slots);
  if (phrase_mode) {
    std::string key = prompt;
    std::replace(key.begin(), key.end(), ' ', '_');
    auto it = vectors.find(key);
    if (it == vectors.end()) {
      throw OutOfVocabulary("prompt not in phrase-mode embedding table: " + key, {key});
    }
    return it->second;
  }
  const std::vector<std::string> tokens = tokenize(prompt);
  std::vector<double> mean(dim, 0.0);
  std::vector<std::string> missing;
  int found = 0;
  for (const std::string& tok : tokens) {
    auto it = vectors.find(tok);
    if (it == vectors.end()) {
      missing.push_back(tok);
      continue;
    }
    for (int i = 0; i < dim; ++i) mean[i] += it->second[i];
    ++found;
  }
  if (found == 0) {
    throw OutOfVocabulary("no tokens of prompt '" + prompt + "' in embedding table",
                          missing);
  }
  for (double& v : mean) v /= found;
  return mean;
}

EmbeddingTable parse_embeddings(const std::string& text) {
  EmbeddingTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vec;
    double v;
    while (ls >> v) vec.push_back(v);
    if (vec.empty()) throw ParseError("embedding line " + std::to_string(line_no) + ": no values");
    if (table.dim == 0) table.dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != table.dim) {
      throw ParseError("embedding line " + std::to_string(line_no) + ": dimension " +
                       std::to_string(vec.size()) + " != " + std::to_string(table.dim));
    }
    table.vectors[token] = std::move(vec);
  }
  return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open embedding file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_embeddings(ss.str());
}

std::string embeddings_to_text(const EmbeddingTable& table) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [token, vec] : table.vectors) {
    out << token;
    for (double v : vec) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

double OracleScores::score_or(const std::string& object, const std::string& room) const {
  double best = 0.0;
  for (const std::string& rec : table_->receptacles_for(object, room)) {
    best = std::max(best, table_->c_or(object, room, rec));
  }
  return best;
}

double OracleScores::score_orr(const std::string& object, const std::string& room,
                               const std::string& receptacle) const {
  return table_->c_or(object, room, receptacle);
}

double ExternalScores::score_or(const std::string& object, const std::string& room) const {
  auto it = scores.find(object + "|" + room);
  return it == scores.end() ? 0.0 : it->second;
}

double ExternalScores::score_orr(const std::string& object, const std::string& room,
                                 const std::string& receptacle) const {
  auto it = scores.find(object + "|" + room + "|" + receptacle);
  return it == scores.end() ? 0.0 : it->second;
}

ExternalScores ExternalScores::from_json(const std::string& json_text) {
  ExternalScores model;
  try {
    ordered_json j = ordered_json::parse(json_text);
    for (auto it = j.begin(); it != j.end(); ++it) {
      model.scores[it.key()] = it.value().get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("score table: ") + e.what());
  }
  return model;
}

ExternalScores ExternalScores::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open score table: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

namespace {

double hash_unit(uint64_t seed, const std::string& key) {
  const uint64_t h = mix_seed(seed, fnv1a64(key));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

double RandomScores::score_or(const std::string& object, const std::string& room) const {
  return hash_unit(seed_, "or|" + object + "|" + room);
}

double RandomScores::score_orr(const std::string& object, const std::string& room,
                               const std::string& receptacle) const {
  return hash_unit(seed_, "orr|" + object + "|" + room + "|" + receptacle);
}

// ---------------------------------------------------------------------------
// MLP

Mlp::Mlp(int in, int hidden, int out) : in_dim(in), hidden_dim(hidden), out_dim(out) {
  const size_t n = static_cast<size_t>(hidden) * in + hidden +
                   static_cast<size_t>(hidden) * hidden + hidden +
                   static_cast<size_t>(out) * hidden + out;
  params.assign(n, 0.0);
}

void Mlp::init(Rng& rng) {
  size_t off = 0;
  auto init_layer = [&](int rows, int cols) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (int i = 0; i < rows * cols; ++i) {
      params[off++] = (real01(rng) * 2.0 - 1.0) * bound;
    }
    for (int i = 0; i < rows; ++i) params[off++] = 0.0;  // biases
  };
  init_layer(hidden_dim, in_dim);
  init_layer(hidden_dim, hidden_dim);
  init_layer(out_dim, hidden_dim);
}

namespace {

struct MlpCache {
  std::vector<double> h0_pre, h0, h1_pre, h1, z;
};

struct MlpOffsets {
  size_t w1, b1, w2, b2, w3, b3;
};

MlpOffsets offsets(const Mlp& m) {
  MlpOffsets o;
  o.w1 = 0;
  o.b1 = o.w1 + static_cast<size_t>(m.hidden_dim) * m.in_dim;
  o.w2 = o.b1 + m.hidden_dim;
  o.b2 = o.w2 + static_cast<size_t>(m.hidden_dim) * m.hidden_dim;
  o.w3 = o.b2 + m.hidden_dim;
  o.b3 = o.w3 + static_cast<size_t>(m.out_dim) * m.hidden_dim;
  return o;
}

void affine(const double* w, const double* b, const std::vector<double>& x,
            std::vector<double>& y, int rows, int cols) {
  y.resize(rows);
  for (int i = 0; i < rows; ++i) {
    const double* wi = w + static_cast<size_t>(i) * cols;
    double acc = b[i];
    for (int j = 0; j < cols; ++j) acc += wi[j] * x[j];
    y[i] = acc;
  }
}

void relu(const std::vector<double>& x, std::vector<double>& y) {
  y.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

MlpCache forward_cached(const Mlp& m, const std::vector<double>& x) {
  const MlpOffsets o = offsets(m);
  MlpCache c;
  affine(m.params.data() + o.w1, m.params.data() + o.b1, x, c.h0_pre, m.hidden_dim, m.in_dim);
  relu(c.h0_pre, c.h0);
  affine(m.params.data() + o.w2, m.params.data() + o.b2, c.h0, c.h1_pre, m.hidden_dim,
         m.hidden_dim);
  relu(c.h1_pre, c.h1);
  affine(m.params.data() + o.w3, m.params.data() + o.b3, c.h1, c.z, m.out_dim, m.hidden_dim);
  return c;
}

// Accumulates parameter gradients for one sample; uses the forward cache.
void backward_cached(const Mlp& m, const std::vector<double>& x, const MlpCache& c,
                     const std::vector<double>& dz, std::vector<double>& grad) {
  const MlpOffsets o = offsets(m);
  std::vector<double> dh1(m.hidden_dim, 0.0);
  for (int i = 0; i < m.out_dim; ++i) {
    const double g = dz[i];
    if (g == 0.0) continue;
    double* gw = grad.data() + o.w3 + static_cast<size_t>(i) * m.hidden_dim;
    const double* w = m.params.data() + o.w3 + static_cast<size_t>(i) * m.hidden_dim;
    for (int j = 0; j < m.hidden_dim; ++j) {
      gw[j] += g * c.h1[j];
      dh1[j] += g * w[j];
    }
    grad[o.b3 + i] += g;
  }
  std::vector<double> dh0(m.hidden_dim, 0.0);
  for (int i = 0; i < m.hidden_dim; ++i) {
    const double g = c.h1_pre[i] > 0.0 ? dh1[i] : 0.0;
    if (g == 0.0) continue;
    double* gw = grad.data() + o.w2 + static_cast<size_t>(i) * m.hidden_dim;
    const double* w = m.params.data() + o.w2 + static_cast<size_t>(i) * m.hidden_dim;
    for (int j = 0; j < m.hidden_dim; ++j) {
      gw[j] += g * c.h0[j];
      dh0[j] += g * w[j];
    }
    grad[o.b2 + i] += g;
  }
  for (int i = 0; i < m.hidden_dim; ++i) {
    const double g = c.h0_pre[i] > 0.0 ? dh0[i] : 0.0;
    if (g == 0.0) continue;
    double* gw = grad.data() + o.w1 + static_cast<size_t>(i) * m.in_dim;
    for (int j = 0; j < m.in_dim; ++j) gw[j] += g * x[j];
    grad[o.b1 + i] += g;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const std::vector<double>& a) {
  return std::sqrt(std::max(dot(a, a), 1e-300));
}

// d cos(a,b) / d a = (b/|b| - cos * a/|a|) / |a|
std::vector<double> dcos_da(const std::vector<double>& a, const std::vector<double>& b,
                            double cos_ab) {
  const double na = norm(a), nb = norm(b);
  std::vector<double> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    out[i] = (b[i] / nb - cos_ab * a[i] / na) / na;
  }
  return out;
}

}  // namespace

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
  return forward_cached(*this, x).z;
}

void Mlp::backward(const std::vector<double>& x, const std::vector<double>& dz,
                   std::vector<double>& grad) const {
  const MlpCache c = forward_cached(*this, x);
  backward_cached(*this, x, c, dz, grad);
}

double infonce_loss(const Mlp& mlp, const std::vector<std::vector<double>>& queries,
                    const std::vector<std::vector<double>>& keys, double tau,
                    std::vector<double>* grad) {
  const size_t n = queries.size();
  std::vector<MlpCache> qc(n), kc(n);
  for (size_t i = 0; i < n; ++i) {
    qc[i] = forward_cached(mlp, queries[i]);
    kc[i] = forward_cached(mlp, keys[i]);
  }
  std::vector<std::vector<double>> cos(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      cos[i][j] = dot(qc[i].z, kc[j].z) / (norm(qc[i].z) * norm(kc[j].z));
    }
  }
  double loss = 0.0;
  std::vector<std::vector<double>> prob(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    double mx = -1e300;
    for (size_t j = 0; j < n; ++j) mx = std::max(mx, cos[i][j] / tau);
    double lse = 0.0;
    for (size_t j = 0; j < n; ++j) lse += std::exp(cos[i][j] / tau - mx);
    lse = mx + std::log(lse);
    loss += lse - cos[i][i] / tau;
    for (size_t j = 0; j < n; ++j) prob[i][j] = std::exp(cos[i][j] / tau - lse);
  }
  loss /= static_cast<double>(n);

  if (grad != nullptr) {
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> dzq(mlp.out_dim, 0.0);
      for (size_t j = 0; j < n; ++j) {
        const double g = (prob[i][j] - (i == j ? 1.0 : 0.0)) / (tau * static_cast<double>(n));
        if (g == 0.0) continue;
        const std::vector<double> d = dcos_da(qc[i].z, kc[j].z, cos[i][j]);
        for (int t = 0; t < mlp.out_dim; ++t) dzq[t] += g * d[t];
      }
      backward_cached(mlp, queries[i], qc[i], dzq, *grad);
    }
    for (size_t j = 0; j < n; ++j) {
      std::vector<double> dzk(mlp.out_dim, 0.0);
      for (size_t i = 0; i < n; ++i) {
        const double g = (prob[i][j] - (i == j ? 1.0 : 0.0)) / (tau * static_cast<double>(n));
        if (g == 0.0) continue;
        const std::vector<double> d = dcos_da(kc[j].z, qc[i].z, cos[i][j]);
        for (int t = 0; t < mlp.out_dim; ++t) dzk[t] += g * d[t];
      }
      backward_cached(mlp, keys[j], kc[j], dzk, *grad);
    }
  }
  return loss;
}

double bce_loss(const Mlp& mlp, const std::vector<std::vector<double>>& queries,
                const std::vector<std::vector<double>>& keys,
                const std::vector<int>& labels, double tau, std::vector<double>* grad) {
  const size_t n = queries.size();
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const MlpCache qc = forward_cached(mlp, queries[i]);
    const MlpCache kc = forward_cached(mlp, keys[i]);
    const double cos_qk = dot(qc.z, kc.z) / (norm(qc.z) * norm(kc.z));
    const double s = cos_qk / tau;
    // log(1 + e^{-|s|}) form keeps both branches stable.
    const double softplus = std::log1p(std::exp(-std::abs(s))) + std::max(s, 0.0);
    loss += labels[i] == 1 ? softplus - s : softplus;
    if (grad != nullptr) {
      const double p = 1.0 / (1.0 + std::exp(-s));
      const double g = (p - labels[i]) / (tau * static_cast<double>(n));
      const std::vector<double> dq = dcos_da(qc.z, kc.z, cos_qk);
      const std::vector<double> dk = dcos_da(kc.z, qc.z, cos_qk);
      std::vector<double> dzq(mlp.out_dim), dzk(mlp.out_dim);
      for (int t = 0; t < mlp.out_dim; ++t) {
        dzq[t] = g * dq[t];
        dzk[t] = g * dk[t];
      }
      backward_cached(mlp, queries[i], qc, dzq, *grad);
      backward_cached(mlp, keys[i], kc, dzk, *grad);
    }
  }
  return loss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// EmbeddingRanker

std::vector<double> EmbeddingRanker::projected(const Mlp& mlp, const std::string& prompt,
                                               const std::vector<double>& emb) const {
  const std::string key = (&mlp == &or_mlp ? "or|" : "orr|") + prompt;
  std::lock_guard<std::mutex> lock(cache_->mutex);
  auto it = cache_->entries.find(key);
  if (it == cache_->entries.end()) {
    it = cache_->entries.emplace(key, mlp.forward(emb)).first;
  }
  return it->second;
}

double EmbeddingRanker::cosine_score(const Mlp& mlp, const std::string& query_prompt,
                                     const std::vector<double>& query_emb,
                                     const std::string& key_prompt,
                                     const std::vector<double>& key_emb) const {
  const std::vector<double> zq = projected(mlp, query_prompt, query_emb);
  const std::vector<double> zk = projected(mlp, key_prompt, key_emb);
  double nq = 0.0, nk = 0.0, d = 0.0;
  for (size_t i = 0; i < zq.size(); ++i) {
    nq += zq[i] * zq[i];
    nk += zk[i] * zk[i];
    d += zq[i] * zk[i];
  }
  const double cos_qk = d / std::sqrt(std::max(nq * nk, 1e-300));
  return (cos_qk + 1.0) / 2.0;  // map [-1,1] to [0,1]
}

double EmbeddingRanker::score_or(const std::string& object, const std::string& room) const {
  try {
    const std::string qp = fill_template(kOrQueryTemplate, {{"object", object}});
    const std::string kp = fill_template(kOrKeyTemplate, {{"room", room}});
    return cosine_score(or_mlp, qp, embeddings.embed_prompt(kOrQueryTemplate, {{"object", object}}),
                        kp, embeddings.embed_prompt(kOrKeyTemplate, {{"room", room}}));
  } catch (const OutOfVocabulary&) {
    return 0.0;
  }
}

double EmbeddingRanker::score_orr(const std::string& object, const std::string& room,
                                  const std::string& receptacle) const {
  try {
    const std::map<std::string, std::string> qs{{"object", object}, {"room", room}};
    const std::map<std::string, std::string> ks{{"receptacle", receptacle}, {"room", room}};
    return cosine_score(orr_mlp, fill_template(kOrrQueryTemplate, qs),
                        embeddings.embed_prompt(kOrrQueryTemplate, qs),
                        fill_template(kOrrKeyTemplate, ks),
                        embeddings.embed_prompt(kOrrKeyTemplate, ks));
  } catch (const OutOfVocabulary&) {
    return 0.0;
  }
}

namespace {

ordered_json mlp_to_json(const Mlp& m) {
  ordered_json j;
  j["in_dim"] = m.in_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["out_dim"] = m.out_dim;
  j["params"] = m.params;  // row-major per layer: W1,b1,W2,b2,W3,b3
  return j;
}

Mlp mlp_from_json(const ordered_json& j) {
  Mlp m(j.at("in_dim").get<int>(), j.at("hidden_dim").get<int>(), j.at("out_dim").get<int>());
  const auto& p = j.at("params");
  if (p.size() != m.params.size()) {
    throw ParseError("checkpoint MLP parameter count mismatch");
  }
  for (size_t i = 0; i < m.params.size(); ++i) m.params[i] = p.at(i).get<double>();
  return m;
}

}  // namespace

std::string EmbeddingRanker::checkpoint_json() const {
  ordered_json j;
  j["tau"] = tau;
  if (calibrated_s_l) {
    j["s_l"] = *calibrated_s_l;
  } else {
    j["s_l"] = nullptr;
  }
  j["phrase_mode"] = embeddings.phrase_mode;
  j["embedding_dim"] = embeddings.dim;
  j["or_mlp"] = mlp_to_json(or_mlp);
  j["orr_mlp"] = mlp_to_json(orr_mlp);
  return j.dump() + "\n";
}

EmbeddingRanker EmbeddingRanker::from_checkpoint(const std::string& json_text,
                                                 EmbeddingTable table) {
  EmbeddingRanker ranker;
  try {
    ordered_json j = ordered_json::parse(json_text);
    ranker.tau = j.at("tau").get<double>();
    if (!j.at("s_l").is_null()) ranker.calibrated_s_l = j.at("s_l").get<double>();
    table.phrase_mode = j.at("phrase_mode").get<bool>();
    if (j.at("embedding_dim").get<int>() != table.dim) {
      throw ParseError("checkpoint embedding_dim does not match the embedding file");
    }
    ranker.or_mlp = mlp_from_json(j.at("or_mlp"));
    ranker.orr_mlp = mlp_from_json(j.at("orr_mlp"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  ranker.embeddings = std::move(table);
  return ranker;
}

EmbeddingRanker EmbeddingRanker::load_checkpoint(const std::string& path,
                                                 EmbeddingTable table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_checkpoint(ss.str(), std::move(table));
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay;
  std::vector<double> m, v;
  int t = 0;

  Adam(size_t n, double lr_, double wd) : lr(lr_), weight_decay(wd), m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i] + weight_decay * params[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

struct PromptPair {
  std::vector<double> query;
  std::vector<double> key;
  int label = 1;
};

// Scores one task from in-progress MLP weights for checkpoint selection.
class PartialRanker : public ScoreModel {
 public:
  PartialRanker(const EmbeddingTable& table, const Mlp& mlp, bool orr_task)
      : table_(&table), mlp_(&mlp), orr_task_(orr_task) {}

  double score_or(const std::string& object, const std::string& room) const override {
    if (orr_task_) return 0.0;
    return score(kOrQueryTemplate, {{"object", object}}, kOrKeyTemplate, {{"room", room}});
  }
  double score_orr(const std::string& object, const std::string& room,
                   const std::string& receptacle) const override {
    if (!orr_task_) return 0.0;
    return score(kOrrQueryTemplate, {{"object", object}, {"room", room}}, kOrrKeyTemplate,
                 {{"receptacle", receptacle}, {"room", room}});
  }

 private:
  double score(const std::string& qt, const std::map<std::string, std::string>& qs,
               const std::string& kt, const std::map<std::string, std::string>& ks) const {
    try {
      const std::vector<double> zq = mlp_->forward(table_->embed_prompt(qt, qs));
      const std::vector<double> zk = mlp_->forward(table_->embed_prompt(kt, ks));
      double nq = 0.0, nk = 0.0, d = 0.0;
      for (size_t i = 0; i < zq.size(); ++i) {
        nq += zq[i] * zq[i];
        nk += zk[i] * zk[i];
        d += zq[i] * zk[i];
      }
      return (d / std::sqrt(std::max(nq * nk, 1e-300)) + 1.0) / 2.0;
    } catch (const OutOfVocabulary&) {
      return 0.0;
    }
  }

  const EmbeddingTable* table_;
  const Mlp* mlp_;
  bool orr_task_;
};

}  // namespace

TrainResult train_cm(const EmbeddingTable& embeddings, const PreferenceTable& table,
                     const TrainConfig& config, const PreferenceTable* validation) {
  if (config.batch_size < 1 || config.learning_rate <= 0.0 || config.epochs < 1 ||
      config.tau <= 0.0 || config.weight_decay < 0.0) {
    throw ValidationError("train config values must be positive");
  }
  const PreferenceTable& val = validation != nullptr ? *validation : table;

  std::vector<std::string> objects = table.object_categories();
  if (!config.train_objects.empty()) {
    std::set<std::string> allowed(config.train_objects.begin(), config.train_objects.end());
    std::erase_if(objects, [&](const std::string& o) { return allowed.count(o) == 0; });
  }

  // ORR pairs: (object-room prompt, best-average-rank correct receptacle).
  std::vector<PromptPair> orr_pairs;
  // OR pairs: (object prompt, room prompt, room-has-correct-receptacle label).
  std::vector<PromptPair> or_pairs;
  int skipped_oov = 0;
  for (const std::string& object : objects) {
    for (const std::string& room : table.rooms_for_object(object)) {
      std::optional<std::pair<double, std::string>> best;  // (mean rank, receptacle)
      bool has_correct = false;
      for (const std::string& rec : table.receptacles_for(object, room)) {
        const PrefEntry& e = table.at({object, room, rec});
        if (e.c_or <= 0.5) continue;
        has_correct = true;
        const double mean = e.mean_correct_rank.value_or(0.0);
        if (!best || mean < best->first || (mean == best->first && rec < best->second)) {
          best = {mean, rec};
        }
      }
      try {
        if (best) {
          PromptPair pair;
          pair.query = embeddings.embed_prompt(kOrrQueryTemplate,
                                               {{"object", object}, {"room", room}});
          pair.key = embeddings.embed_prompt(
              kOrrKeyTemplate, {{"receptacle", best->second}, {"room", room}});
          orr_pairs.push_back(std::move(pair));
        }
        PromptPair orp;
        orp.query = embeddings.embed_prompt(kOrQueryTemplate, {{"object", object}});
        orp.key = embeddings.embed_prompt(kOrKeyTemplate, {{"room", room}});
        orp.label = has_correct ? 1 : 0;
        or_pairs.push_back(std::move(orp));
      } catch (const OutOfVocabulary&) {
        ++skipped_oov;
      }
    }
  }
  if (skipped_oov > 0) {
    log::info("train_cm: skipped %d prompt pairs with out-of-vocabulary tokens", skipped_oov);
  }
  if (orr_pairs.empty()) {
    throw NoPositivePairs("no (object-room, correct receptacle) training pairs");
  }

  TrainResult result;
  result.ranker.embeddings = embeddings;
  result.ranker.tau = config.tau;

  auto train_task = [&](bool orr_task, std::vector<PromptPair>& pairs, Mlp& out_mlp,
                        std::vector<double>& loss_log, double& best_map) {
    Rng rng(mix_seed(config.seed, orr_task ? 0x08c1 : 0x08c2));
    Mlp mlp(embeddings.dim, config.hidden_dim, config.out_dim);
    mlp.init(rng);
    Adam opt(mlp.param_count(), config.learning_rate, config.weight_decay);
    Mlp best = mlp;
    best_map = -1.0;
    std::vector<size_t> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      shuffle(rng, order);
      double epoch_loss = 0.0;
      int batches = 0;
      for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
        const size_t end = std::min(order.size(), begin + config.batch_size);
        std::vector<std::vector<double>> queries, keys;
        std::vector<int> labels;
        for (size_t i = begin; i < end; ++i) {
          queries.push_back(pairs[order[i]].query);
          keys.push_back(pairs[order[i]].key);
          labels.push_back(pairs[order[i]].label);
        }
        std::vector<double> grad(mlp.param_count(), 0.0);
        const double loss = orr_task
                                ? infonce_loss(mlp, queries, keys, config.tau, &grad)
                                : bce_loss(mlp, queries, keys, labels, config.tau, &grad);
        if (!std::isfinite(loss)) {
          throw DivergenceDetected("non-finite loss at epoch " + std::to_string(epoch));
        }
        opt.step(mlp.params, grad);
        epoch_loss += loss;
        ++batches;
      }
      epoch_loss /= std::max(batches, 1);
      loss_log.push_back(epoch_loss);
      log::debug("train_cm %s epoch %d loss %.6f", orr_task ? "orr" : "or", epoch, epoch_loss);

      const PartialRanker probe(embeddings, mlp, orr_task);
      const MapEval eval = eval_map(probe, val);
      const double score = orr_task ? eval.orr_map : eval.or_map;
      if (score > best_map) {
        best_map = score;
        best = mlp;
      }
    }
    out_mlp = std::move(best);
  };

  train_task(true, orr_pairs, result.ranker.orr_mlp, result.orr_loss, result.best_orr_map);
  train_task(false, or_pairs, result.ranker.or_mlp, result.or_loss, result.best_or_map);
  return result;
}

// ---------------------------------------------------------------------------
// Composition, calibration, evaluation

namespace {

std::vector<double> softmax_over(const std::vector<double>& scores, double tau) {
  std::vector<double> out(scores.size());
  double mx = -1e300;
  for (double s : scores) mx = std::max(mx, s / tau);
  double total = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] / tau - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace

std::vector<ScoredCandidate> score_joint(
    const ScoreModel& model, const std::string& object,
    const std::vector<std::pair<std::string, std::string>>& candidates, double tau) {
  if (candidates.empty()) throw ValidationError("score_joint: empty candidate list");

  std::map<std::string, std::set<std::string>> by_room;
  for (const auto& [room, rec] : candidates) by_room[room].insert(rec);

  std::vector<std::string> rooms;
  std::vector<double> room_scores;
  for (const auto& [room, recs] : by_room) {
    rooms.push_back(room);
    room_scores.push_back(model.score_or(object, room));
  }
  const std::vector<double> p_room = softmax_over(room_scores, tau);

  std::vector<ScoredCandidate> out;
  for (size_t i = 0; i < rooms.size(); ++i) {
    const auto& recs = by_room[rooms[i]];
    std::vector<std::string> rec_list(recs.begin(), recs.end());
    std::vector<double> rec_scores;
    rec_scores.reserve(rec_list.size());
    for (const std::string& rec : rec_list) {
      rec_scores.push_back(model.score_orr(object, rooms[i], rec));
    }
    const std::vector<double> p_rec = softmax_over(rec_scores, tau);
    for (size_t k = 0; k < rec_list.size(); ++k) {
      out.push_back({rooms[i], rec_list[k], p_room[i] * p_rec[k]});
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    if (a.room != b.room) return a.room < b.room;
    return a.receptacle < b.receptacle;
  });
  return out;
}

RankedPlacements ranked_placements(
    const ScoreModel& model, const std::string& object,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& rooms,
    double s_l) {
  struct RoomEntry {
    double or_score;
    std::string room;
    std::vector<std::pair<double, std::string>> recs;  // (orr score, receptacle)
  };
  std::vector<RoomEntry> entries;
  for (const auto& [room, recs] : rooms) {
    RoomEntry e;
    e.room = room;
    e.or_score = model.score_or(object, room);
    for (const std::string& rec : recs) {
      e.recs.emplace_back(model.score_orr(object, room, rec), rec);
    }
    std::sort(e.recs.begin(), e.recs.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), [](const RoomEntry& a, const RoomEntry& b) {
    if (a.or_score != b.or_score) return a.or_score > b.or_score;
    return a.room < b.room;
  });

  RankedPlacements out;
  for (const RoomEntry& e : entries) {
    for (const auto& [score, rec] : e.recs) {
      if (score > s_l) out.correct.emplace_back(e.room, rec, score);
    }
  }
  for (const RoomEntry& e : entries) {
    for (const auto& [score, rec] : e.recs) {
      if (score <= s_l) out.incorrect.emplace_back(e.room, rec, score);
    }
  }
  return out;
}

ThresholdCalibration calibrate_threshold(const ScoreModel& model,
                                         const PreferenceTable& validation) {
  struct Labeled {
    double score;
    bool positive;
  };
  std::vector<Labeled> keys;
  for (const auto& [key, entry] : validation.entries) {
    keys.push_back({model.score_orr(key.object, key.room, key.receptacle),
                    entry.c_or > 0.5});
  }
  ThresholdCalibration best;
  best.s_l = 0.0;
  best.f1 = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double s = k * 0.01;
    int tp = 0, fp = 0, fn = 0;
    for (const Labeled& item : keys) {
      const bool predicted = item.score >= s;
      if (predicted && item.positive) ++tp;
      else if (predicted && !item.positive) ++fp;
      else if (!predicted && item.positive) ++fn;
    }
    const int denom = 2 * tp + fp + fn;
    const double f1 = denom == 0 ? 0.0 : 2.0 * tp / denom;
    if (f1 > best.f1) {
      best.f1 = f1;
      best.s_l = s;
    }
  }
  return best;
}

double average_precision(const std::vector<std::pair<std::string, double>>& scored,
                         const std::vector<std::string>& positives) {
  if (positives.empty()) return 0.0;
  std::vector<std::pair<std::string, double>> ranked = scored;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::set<std::string> pos(positives.begin(), positives.end());
  double ap = 0.0;
  int hits = 0;
  for (size_t k = 0; k < ranked.size(); ++k) {
    if (pos.count(ranked[k].first) > 0) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(pos.size());
}

MapEval eval_map(const ScoreModel& model, const PreferenceTable& table,
                 const std::vector<std::string>& objects) {
  const std::vector<std::string> all =
      objects.empty() ? table.object_categories() : objects;
  MapEval eval;
  double or_sum = 0.0, orr_sum = 0.0;
  for (const std::string& object : all) {
    const std::vector<std::string> rooms = table.rooms_for_object(object);
    if (rooms.empty()) continue;

    // OR: positive rooms hold at least one Correct receptacle.
    std::vector<std::pair<std::string, double>> room_scored;
    std::vector<std::string> room_pos;
    for (const std::string& room : rooms) {
      room_scored.emplace_back(room, model.score_or(object, room));
      for (const std::string& rec : table.receptacles_for(object, room)) {
        if (table.at({object, room, rec}).c_or > 0.5) {
          room_pos.push_back(room);
          break;
        }
      }
    }
    if (!room_pos.empty()) {
      or_sum += average_precision(room_scored, room_pos);
      ++eval.or_objects;
    }

    // ORR: AP per room that has a Correct receptacle, averaged per object.
    double obj_ap = 0.0;
    int obj_rooms = 0;
    for (const std::string& room : rooms) {
      std::vector<std::pair<std::string, double>> rec_scored;
      std::vector<std::string> rec_pos;
      for (const std::string& rec : table.receptacles_for(object, room)) {
        rec_scored.emplace_back(rec, model.score_orr(object, room, rec));
        if (table.at({object, room, rec}).c_or > 0.5) rec_pos.push_back(rec);
      }
      if (rec_pos.empty()) continue;
      obj_ap += average_precision(rec_scored, rec_pos);
      ++obj_rooms;
    }
    if (obj_rooms > 0) {
      orr_sum += obj_ap / obj_rooms;
      ++eval.orr_objects;
    }
  }
  eval.or_map = eval.or_objects > 0 ? or_sum / eval.or_objects : 0.0;
  eval.orr_map = eval.orr_objects > 0 ? orr_sum / eval.orr_objects : 0.0;
  return eval;
}

}  // namespace housekeep
