#include "housekeep/preferences.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "housekeep/errors.hpp"
#include "housekeep/rng.hpp"

namespace housekeep {

using ordered_json = nlohmann::ordered_json;

std::string bin_name(Bin b) {
  switch (b) {
    case Bin::Correct: return "correct";
    case Bin::Misplaced: return "misplaced";
    case Bin::Implausible: return "implausible";
  }
  return "implausible";
}

Bin bin_from_name(const std::string& name) {
  if (name == "correct") return Bin::Correct;
  if (name == "misplaced") return Bin::Misplaced;
  if (name == "implausible") return Bin::Implausible;
  throw ParseError("unknown bin: " + name);
}

const PrefEntry& PreferenceTable::at(const PrefKey& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) {
    throw MissingKey("no preference entry for (" + key.object + ", " + key.room +
                     ", " + key.receptacle + ")");
  }
  return it->second;
}

const PrefEntry* PreferenceTable::find(const PrefKey& key) const {
  auto it = entries.find(key);
  return it == entries.end() ? nullptr : &it->second;
}

double PreferenceTable::c_or(const std::string& object, const std::string& room,
                             const std::string& receptacle) const {
  const PrefEntry* e = find({object, room, receptacle});
  return e == nullptr ? 0.0 : e->c_or;
}

double PreferenceTable::m_or(const std::string& object, const std::string& room,
                             const std::string& receptacle) const {
  const PrefEntry* e = find({object, room, receptacle});
  return e == nullptr ? 0.0 : e->m_or;
}

PlacementClass PreferenceTable::classify(const std::string& object,
                                         const std::string& room,
                                         const std::string& receptacle) const {
  const PrefEntry& e = at({object, room, receptacle});
  if (e.c_or > 0.5) return PlacementClass::Correct;
  if (e.m_or > 0.5) return PlacementClass::Misplaced;
  return PlacementClass::Neutral;
}

std::vector<PrefKey> PreferenceTable::correct_keys_ranked(const std::string& object) const {
  std::vector<std::pair<double, PrefKey>> ranked;
  for (const auto& [key, entry] : entries) {
    if (key.object != object || entry.c_or <= 0.5) continue;
    // A Correct key always has at least one correct vote, so the mean exists.
    ranked.emplace_back(entry.mean_correct_rank.value_or(0.0), key);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second.room != b.second.room) return a.second.room < b.second.room;
    return a.second.receptacle < b.second.receptacle;
  });
  std::vector<PrefKey> keys;
  keys.reserve(ranked.size());
  for (auto& [mean, key] : ranked) keys.push_back(std::move(key));
  return keys;
}

int PreferenceTable::correct_rank(const std::string& object, const std::string& room,
                                  const std::string& receptacle) const {
  const std::vector<PrefKey> keys = correct_keys_ranked(object);
  for (size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].room == room && keys[i].receptacle == receptacle) {
      return static_cast<int>(i) + 1;
    }
  }
  throw NotCorrect("(" + object + ", " + room + ", " + receptacle +
                   ") is not classified Correct");
}

std::vector<std::string> PreferenceTable::object_categories() const {
  std::set<std::string> seen;
  for (const auto& [key, entry] : entries) seen.insert(key.object);
  return {seen.begin(), seen.end()};
}

std::vector<std::string> PreferenceTable::rooms_for_object(const std::string& object) const {
  std::set<std::string> seen;
  for (const auto& [key, entry] : entries) {
    if (key.object == object) seen.insert(key.room);
  }
  return {seen.begin(), seen.end()};
}

std::vector<std::string> PreferenceTable::receptacles_for(const std::string& object,
                                                          const std::string& room) const {
  std::set<std::string> seen;
  for (const auto& [key, entry] : entries) {
    if (key.object == object && key.room == room) seen.insert(key.receptacle);
  }
  return {seen.begin(), seen.end()};
}

namespace {

struct GroupKey {
  std::string annotator;
  std::string object;
  std::string room;
  auto operator<=>(const GroupKey&) const = default;
};

void validate_annotations(const std::vector<AnnotationRecord>& annotations,
                          const Catalog* catalog) {
  std::set<std::pair<GroupKey, std::string>> seen;
  std::map<std::pair<GroupKey, Bin>, std::vector<int>> rank_groups;
  for (const auto& rec : annotations) {
    if (catalog != nullptr && catalog->find(rec.object) == nullptr) {
      throw UnknownCategory("unknown object category: " + rec.object);
    }
    const GroupKey g{rec.annotator, rec.object, rec.room};
    if (!seen.emplace(g, rec.receptacle).second) {
      throw DuplicateClassification("annotator '" + rec.annotator + "' classified (" +
                                    rec.object + ", " + rec.room + ", " + rec.receptacle +
                                    ") more than once");
    }
    const bool needs_rank = rec.bin != Bin::Implausible;
    if (needs_rank != rec.rank.has_value()) {
      throw ValidationError("rank must be present iff bin is correct/misplaced: (" +
                            rec.annotator + ", " + rec.object + ", " + rec.room + ", " +
                            rec.receptacle + ")");
    }
    if (rec.rank) rank_groups[{g, rec.bin}].push_back(*rec.rank);
  }
  for (auto& [gk, ranks] : rank_groups) {
    std::sort(ranks.begin(), ranks.end());
    for (size_t i = 0; i < ranks.size(); ++i) {
      if (ranks[i] != static_cast<int>(i) + 1) {
        throw ValidationError("ranks of annotator '" + gk.first.annotator + "' for (" +
                              gk.first.object + ", " + gk.first.room +
                              ") are not 1..k without gaps");
      }
    }
  }
}

}  // namespace

PreferenceTable aggregate(const std::vector<AnnotationRecord>& annotations,
                          const Catalog* catalog) {
  validate_annotations(annotations, catalog);

  struct Tally {
    int n = 0;
    int correct = 0;
    int misplaced = 0;
    int implausible = 0;
    std::vector<int> correct_ranks;
  };
  std::map<PrefKey, Tally> tallies;
  for (const auto& rec : annotations) {
    Tally& t = tallies[{rec.object, rec.room, rec.receptacle}];
    ++t.n;
    switch (rec.bin) {
      case Bin::Correct:
        ++t.correct;
        t.correct_ranks.push_back(*rec.rank);
        break;
      case Bin::Misplaced: ++t.misplaced; break;
      case Bin::Implausible: ++t.implausible; break;
    }
  }

  PreferenceTable table;
  for (const auto& [key, t] : tallies) {
    PrefEntry e;
    e.n_annotators = t.n;
    e.c_or = static_cast<double>(t.correct) / t.n;
    e.m_or = static_cast<double>(t.misplaced) / t.n;
    e.i_or = static_cast<double>(t.implausible) / t.n;
    if (!t.correct_ranks.empty()) {
      double sum = 0.0;
      for (int r : t.correct_ranks) sum += r;
      e.mean_correct_rank = sum / static_cast<double>(t.correct_ranks.size());
    }
    table.entries.emplace(key, e);
  }
  return table;
}

double fleiss_kappa(const std::vector<AnnotationRecord>& annotations, KappaMode mode) {
  const int num_categories = mode == KappaMode::ThreeWay ? 3 : 2;
  auto category_of = [mode](Bin b) {
    if (mode == KappaMode::ThreeWay) return static_cast<int>(b);
    return b == Bin::Correct ? 0 : 1;
  };

  std::map<PrefKey, std::vector<int>> items;  // key -> per-category counts
  for (const auto& rec : annotations) {
    auto& counts = items[{rec.object, rec.room, rec.receptacle}];
    counts.resize(num_categories, 0);
    ++counts[category_of(rec.bin)];
  }
  if (items.empty()) throw UnequalRaterCounts("no annotations");

  int n = -1;
  for (const auto& [key, counts] : items) {
    int total = 0;
    for (int c : counts) total += c;
    if (n == -1) n = total;
    if (total != n) {
      throw UnequalRaterCounts("item (" + key.object + ", " + key.room + ", " +
                               key.receptacle + ") rated by " + std::to_string(total) +
                               " annotators, expected " + std::to_string(n));
    }
  }
  if (n < 2) throw UnequalRaterCounts("need at least 2 raters per item");

  const double num_items = static_cast<double>(items.size());
  double p_bar = 0.0;
  std::vector<double> p_cat(num_categories, 0.0);
  for (const auto& [key, counts] : items) {
    double sum_sq = 0.0;
    for (int j = 0; j < num_categories; ++j) {
      const int c = j < static_cast<int>(counts.size()) ? counts[j] : 0;
      sum_sq += static_cast<double>(c) * c;
      p_cat[j] += c;
    }
    p_bar += (sum_sq - n) / (static_cast<double>(n) * (n - 1));
  }
  p_bar /= num_items;
  double p_e = 0.0;
  for (int j = 0; j < num_categories; ++j) {
    const double p = p_cat[j] / (num_items * n);
    p_e += p * p;
  }
  if (std::abs(1.0 - p_e) < 1e-12) {
    throw DegenerateAgreement("chance agreement is 1 (single category used); kappa undefined");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

std::vector<AnnotationRecord> filter_top_agreement(
    const std::vector<AnnotationRecord>& annotations, int keep_k) {
  // Majority bin per (object, room, receptacle); annotators scored by how
  // many of their votes match it within each (object, room) group.
  std::map<PrefKey, std::array<int, 3>> votes;
  for (const auto& rec : annotations) {
    auto it = votes.try_emplace({rec.object, rec.room, rec.receptacle}).first;
    ++it->second[static_cast<int>(rec.bin)];
  }
  auto majority = [&votes](const PrefKey& key) {
    const auto& v = votes.at(key);
    int best = 0;
    for (int j = 1; j < 3; ++j) {
      if (v[j] > v[best]) best = j;
    }
    return static_cast<Bin>(best);
  };

  std::map<std::pair<std::string, std::string>, std::map<std::string, int>> scores;
  for (const auto& rec : annotations) {
    const bool match = majority({rec.object, rec.room, rec.receptacle}) == rec.bin;
    scores[{rec.object, rec.room}][rec.annotator] += match ? 1 : 0;
  }

  std::set<std::tuple<std::string, std::string, std::string>> kept;  // (object, room, annotator)
  for (const auto& [group, per_annotator] : scores) {
    std::vector<std::pair<int, std::string>> order;
    for (const auto& [annotator, score] : per_annotator) order.emplace_back(score, annotator);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (size_t i = 0; i < order.size() && i < static_cast<size_t>(keep_k); ++i) {
      kept.insert({group.first, group.second, order[i].second});
    }
  }

  std::vector<AnnotationRecord> out;
  for (const auto& rec : annotations) {
    if (kept.count({rec.object, rec.room, rec.annotator}) > 0) out.push_back(rec);
  }
  return out;
}

namespace {

// Designated placement structure for one object category.
struct Designation {
  std::vector<std::pair<std::string, std::string>> correct;    // (room, receptacle)
  std::vector<std::pair<std::string, std::string>> misplaced;  // (room, receptacle)
  bool is_designated(const std::string& room, const std::string& rec, Bin bin) const {
    const auto& list = bin == Bin::Correct ? correct : misplaced;
    return std::find(list.begin(), list.end(), std::make_pair(room, rec)) != list.end();
  }
};

}  // namespace

std::vector<AnnotationRecord> synth_preferences(const Catalog& catalog,
                                                const SceneVocabulary& vocab,
                                                uint64_t seed,
                                                const SynthPrefConfig& config) {
  if (vocab.empty()) return {};

  // Objects sharing a high-level group share a home room and receptacle
  // cluster, with per-object variation on top. This keeps the synthetic
  // preferences learnable from category tokens.
  std::vector<std::string> groups;
  for (const auto& cat : catalog.categories) {
    if (std::find(groups.begin(), groups.end(), cat.high_level) == groups.end()) {
      groups.push_back(cat.high_level);
    }
  }
  std::sort(groups.begin(), groups.end());

  std::map<std::string, Designation> by_object;
  for (const auto& cat : catalog.categories) {
    const size_t gi = static_cast<size_t>(
        std::find(groups.begin(), groups.end(), cat.high_level) - groups.begin());
    Rng rng(mix_seed(seed, 0x0b1ec7 + gi));
    Designation d;
    const auto& home = vocab[gi % vocab.size()];
    const auto& home_recs = home.second;
    d.correct.emplace_back(home.first, home_recs[gi % home_recs.size()]);
    if (home_recs.size() > 1) {
      d.correct.emplace_back(home.first, home_recs[(gi + 1) % home_recs.size()]);
    }
    // Misplaced pairs drawn from the next rooms in the vocabulary.
    size_t want = 2 + bounded(rng, 2);
    for (size_t step = 1; step <= vocab.size() && d.misplaced.size() < want; ++step) {
      const auto& other = vocab[(gi + step) % vocab.size()];
      for (const auto& rec : other.second) {
        if (d.misplaced.size() >= want) break;
        if (d.is_designated(other.first, rec, Bin::Correct)) continue;
        d.misplaced.emplace_back(other.first, rec);
      }
    }
    if (d.misplaced.empty()) {
      // Single-room vocabularies: misplace within the home room.
      for (const auto& rec : home_recs) {
        if (!d.is_designated(home.first, rec, Bin::Correct)) {
          d.misplaced.emplace_back(home.first, rec);
          break;
        }
      }
    }
    by_object[cat.name] = d;
  }

  const int n = config.annotators;
  const int forced = (n + 1) / 2 + 1;  // enough votes for a strict majority
  std::vector<AnnotationRecord> records;

  for (const auto& cat : catalog.categories) {
    const Designation& d = by_object.at(cat.name);
    for (int a = 0; a < n; ++a) {
      const std::string annotator = "ann" + std::to_string(a);
      Rng rng(mix_seed(seed, 0xa11057ULL + a * 1315423911ULL +
                                 std::hash<std::string>{}(cat.name)));
      for (const auto& [room, recs] : vocab) {
        std::vector<std::pair<std::string, Bin>> voted;
        for (const auto& rec : recs) {
          Bin designated = Bin::Implausible;
          if (d.is_designated(room, rec, Bin::Correct)) designated = Bin::Correct;
          else if (d.is_designated(room, rec, Bin::Misplaced)) designated = Bin::Misplaced;

          Bin vote;
          const bool primary =
              (!d.correct.empty() && std::make_pair(room, rec) == d.correct.front()) ||
              (!d.misplaced.empty() && std::make_pair(room, rec) == d.misplaced.front());
          if (config.ensure_majorities && primary && a < forced) {
            vote = designated;
          } else if (real01(rng) < config.agreement) {
            vote = designated;
          } else {
            vote = static_cast<Bin>(bounded(rng, 3));
          }
          voted.emplace_back(rec, vote);
        }
        // Assign 1..k ranks per bin: designated-first order, light noise.
        for (Bin bin : {Bin::Correct, Bin::Misplaced}) {
          std::vector<std::string> in_bin;
          for (const auto& [rec, vote] : voted) {
            if (vote == bin) in_bin.push_back(rec);
          }
          std::stable_sort(in_bin.begin(), in_bin.end(),
                           [&](const std::string& x, const std::string& y) {
                             const bool dx = d.is_designated(room, x, bin);
                             const bool dy = d.is_designated(room, y, bin);
                             if (dx != dy) return dx;
                             return x < y;
                           });
          if (in_bin.size() > 1 && real01(rng) < 0.3) {
            const size_t i = bounded(rng, in_bin.size() - 1);
            std::swap(in_bin[i], in_bin[i + 1]);
          }
          for (size_t i = 0; i < in_bin.size(); ++i) {
            records.push_back({annotator, cat.name, room, in_bin[i], bin,
                               static_cast<int>(i) + 1});
          }
        }
        for (const auto& [rec, vote] : voted) {
          if (vote == Bin::Implausible) {
            records.push_back({annotator, cat.name, room, rec, Bin::Implausible, std::nullopt});
          }
        }
      }
    }
  }
  return records;
}

std::vector<AnnotationRecord> parse_annotations_csv(const std::string& text) {
  std::vector<AnnotationRecord> out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty annotation CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "annotator,object,room,receptacle,bin,rank") {
    throw ParseError("annotation CSV header must be "
                     "'annotator,object,room,receptacle,bin,rank', got '" + line + "'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 6) {
      throw ParseError("annotation CSV line " + std::to_string(line_no) +
                       ": expected 6 fields, got " + std::to_string(fields.size()));
    }
    AnnotationRecord rec;
    rec.annotator = fields[0];
    rec.object = fields[1];
    rec.room = fields[2];
    rec.receptacle = fields[3];
    rec.bin = bin_from_name(fields[4]);
    if (!fields[5].empty()) {
      try {
        rec.rank = std::stoi(fields[5]);
      } catch (const std::exception&) {
        throw ParseError("annotation CSV line " + std::to_string(line_no) +
                         ": bad rank '" + fields[5] + "'");
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<AnnotationRecord> load_annotations_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open annotation file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotations_csv(ss.str());
}

std::string annotations_to_csv(const std::vector<AnnotationRecord>& annotations) {
  std::ostringstream out;
  out << "annotator,object,room,receptacle,bin,rank\n";
  for (const auto& rec : annotations) {
    out << rec.annotator << ',' << rec.object << ',' << rec.room << ','
        << rec.receptacle << ',' << bin_name(rec.bin) << ',';
    if (rec.rank) out << *rec.rank;
    out << '\n';
  }
  return out.str();
}

std::string preference_table_to_json(const PreferenceTable& table) {
  ordered_json entries = ordered_json::array();
  for (const auto& [key, e] : table.entries) {
    ordered_json je;
    je["object"] = key.object;
    je["room"] = key.room;
    je["receptacle"] = key.receptacle;
    je["c_or"] = e.c_or;
    je["m_or"] = e.m_or;
    je["i_or"] = e.i_or;
    if (e.mean_correct_rank) {
      je["mean_correct_rank"] = *e.mean_correct_rank;
    } else {
      je["mean_correct_rank"] = nullptr;
    }
    je["n_annotators"] = e.n_annotators;
    entries.push_back(std::move(je));
  }
  ordered_json j;
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

PreferenceTable preference_table_from_json(const std::string& json_text) {
  PreferenceTable table;
  try {
    ordered_json j = ordered_json::parse(json_text);
    for (const auto& je : j.at("entries")) {
      PrefKey key{je.at("object").get<std::string>(), je.at("room").get<std::string>(),
                  je.at("receptacle").get<std::string>()};
      PrefEntry e;
      e.c_or = je.at("c_or").get<double>();
      e.m_or = je.at("m_or").get<double>();
      e.i_or = je.at("i_or").get<double>();
      if (!je.at("mean_correct_rank").is_null()) {
        e.mean_correct_rank = je.at("mean_correct_rank").get<double>();
      }
      e.n_annotators = je.at("n_annotators").get<int>();
      table.entries.emplace(std::move(key), e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("preference table: ") + e.what());
  }
  return table;
}

PreferenceTable load_preferences(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open preferences file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return preference_table_from_json(text);
  }
  return aggregate(parse_annotations_csv(text));
}

}  // namespace housekeep
