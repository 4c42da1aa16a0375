#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "housekeep/errors.hpp"
#include "housekeep/preferences.hpp"
#include "housekeep/synth.hpp"
#include "support/test_util.hpp"

using namespace housekeep;

namespace {

// Builds one annotator's classification of a single receptacle.
AnnotationRecord vote(const std::string& annotator, const std::string& object,
                      const std::string& room, const std::string& receptacle, Bin bin,
                      std::optional<int> rank = std::nullopt) {
  return {annotator, object, room, receptacle, bin, rank};
}

std::vector<AnnotationRecord> votes_for_key(int correct, int misplaced, int implausible,
                                            const std::string& object = "fork",
                                            const std::string& room = "kitchen",
                                            const std::string& receptacle = "drawer") {
  std::vector<AnnotationRecord> out;
  int a = 0;
  for (int i = 0; i < correct; ++i) {
    out.push_back(vote("a" + std::to_string(a++), object, room, receptacle, Bin::Correct, 1));
  }
  for (int i = 0; i < misplaced; ++i) {
    out.push_back(vote("a" + std::to_string(a++), object, room, receptacle, Bin::Misplaced, 1));
  }
  for (int i = 0; i < implausible; ++i) {
    out.push_back(vote("a" + std::to_string(a++), object, room, receptacle, Bin::Implausible));
  }
  return out;
}

}  // namespace

TEST_CASE("aggregate: 7 correct / 2 misplaced / 1 implausible over 10 annotators") {
  const PreferenceTable table = aggregate(votes_for_key(7, 2, 1));
  const PrefEntry& e = table.at({"fork", "kitchen", "drawer"});
  CHECK(e.c_or == doctest::Approx(0.7));
  CHECK(e.m_or == doctest::Approx(0.2));
  CHECK(e.i_or == doctest::Approx(0.1));
  CHECK(e.n_annotators == 10);
  CHECK(table.classify("fork", "kitchen", "drawer") == PlacementClass::Correct);
}

TEST_CASE("aggregate: all implausible is Neutral") {
  const PreferenceTable table = aggregate(votes_for_key(0, 0, 10));
  const PrefEntry& e = table.at({"fork", "kitchen", "drawer"});
  CHECK(e.c_or == 0.0);
  CHECK(e.m_or == 0.0);
  CHECK(e.i_or == 1.0);
  CHECK_FALSE(e.mean_correct_rank.has_value());
  CHECK(table.classify("fork", "kitchen", "drawer") == PlacementClass::Neutral);
}

TEST_CASE("aggregate: mean correct rank is the mean over correct voters") {
  // Ranks {1,2,1} among three Correct annotators -> 4/3.
  std::vector<AnnotationRecord> annotations = {
      vote("a0", "fork", "kitchen", "drawer", Bin::Correct, 1),
      vote("a1", "fork", "kitchen", "drawer", Bin::Correct, 2),
      vote("a1", "fork", "kitchen", "counter", Bin::Correct, 1),
      vote("a2", "fork", "kitchen", "drawer", Bin::Correct, 1),
  };
  const PreferenceTable table = aggregate(annotations);
  CHECK(*table.at({"fork", "kitchen", "drawer"}).mean_correct_rank ==
        doctest::Approx(4.0 / 3.0));
}

TEST_CASE("aggregate rejects duplicate classification and bad ranks") {
  std::vector<AnnotationRecord> dup = {
      vote("a0", "fork", "kitchen", "drawer", Bin::Correct, 1),
      vote("a0", "fork", "kitchen", "drawer", Bin::Misplaced, 1),
  };
  CHECK_THROWS_AS(aggregate(dup), DuplicateClassification);

  std::vector<AnnotationRecord> no_rank = {
      vote("a0", "fork", "kitchen", "drawer", Bin::Correct),
  };
  CHECK_THROWS_AS(aggregate(no_rank), ValidationError);

  std::vector<AnnotationRecord> gap = {
      vote("a0", "fork", "kitchen", "drawer", Bin::Correct, 1),
      vote("a0", "fork", "kitchen", "counter", Bin::Correct, 3),
  };
  CHECK_THROWS_AS(aggregate(gap), ValidationError);

  Catalog catalog;
  catalog.categories = {{"fork", "cutlery", Split::Seen}};
  std::vector<AnnotationRecord> unknown = {
      vote("a0", "spoon", "kitchen", "drawer", Bin::Correct, 1),
  };
  CHECK_THROWS_AS(aggregate(unknown, &catalog), UnknownCategory);
}

TEST_CASE("classify uses strict majorities") {
  const PreferenceTable table = test_util::table_from_ratios({
      {"fork", "kitchen", "drawer", 0.7, 0.2},
      {"fork", "kitchen", "floor", 0.0, 0.6},
      {"fork", "kitchen", "stove", 0.5, 0.4},  // boundary: not a majority
  });
  CHECK(table.classify("fork", "kitchen", "drawer") == PlacementClass::Correct);
  CHECK(table.classify("fork", "kitchen", "floor") == PlacementClass::Misplaced);
  CHECK(table.classify("fork", "kitchen", "stove") == PlacementClass::Neutral);
  CHECK_THROWS_AS(table.classify("fork", "garage", "shelf"), MissingKey);
}

TEST_CASE("classify is invariant to annotation input order") {
  std::vector<AnnotationRecord> annotations;
  for (auto v : votes_for_key(7, 2, 1)) annotations.push_back(v);
  for (auto v : votes_for_key(2, 7, 1, "fork", "bathroom", "sink")) annotations.push_back(v);
  const PreferenceTable a = aggregate(annotations);
  Rng rng(11);
  shuffle(rng, annotations);
  const PreferenceTable b = aggregate(annotations);
  REQUIRE(a.entries.size() == b.entries.size());
  for (const auto& [key, ea] : a.entries) {
    const PrefEntry& eb = b.entries.at(key);
    CHECK(ea.c_or == eb.c_or);
    CHECK(ea.m_or == eb.m_or);
    CHECK(ea.i_or == eb.i_or);
  }
}

TEST_CASE("ratios sum to one for every key") {
  Catalog catalog = synth::make_catalog({});
  SceneVocabulary vocab = {{"kitchen", {"counter", "shelf", "sink"}},
                           {"bedroom", {"bed", "dresser"}}};
  const auto annotations = synth_preferences(catalog, vocab, 99, {});
  const PreferenceTable table = aggregate(annotations);
  REQUIRE(!table.entries.empty());
  for (const auto& [key, e] : table.entries) {
    CHECK(e.c_or + e.m_or + e.i_or == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE((e.c_or > 0.5 && e.m_or > 0.5));
  }
}

TEST_CASE("correct_rank orders by mean rank with lexicographic tie-break") {
  const PreferenceTable single = test_util::table_from_ratios({
      {"fork", "kitchen", "drawer", 0.8, 0.1, 1.0},
  });
  CHECK(single.correct_rank("fork", "kitchen", "drawer") == 1);

  const PreferenceTable two = test_util::table_from_ratios({
      {"fork", "kitchen", "drawer", 0.8, 0.1, 1.2},
      {"fork", "kitchen", "counter", 0.7, 0.1, 2.0},
      {"fork", "kitchen", "floor", 0.1, 0.8, 1.0},  // not Correct: excluded
  });
  CHECK(two.correct_rank("fork", "kitchen", "drawer") == 1);
  CHECK(two.correct_rank("fork", "kitchen", "counter") == 2);
  CHECK_THROWS_AS(two.correct_rank("fork", "kitchen", "floor"), NotCorrect);

  // Tie on mean rank: (room, receptacle) lexicographic order decides.
  const PreferenceTable tie = test_util::table_from_ratios({
      {"fork", "kitchen", "drawer", 0.8, 0.1, 1.5},
      {"fork", "bathroom", "shelf", 0.7, 0.1, 1.5},
  });
  CHECK(tie.correct_rank("fork", "bathroom", "shelf") == 1);
  CHECK(tie.correct_rank("fork", "kitchen", "drawer") == 2);
}

TEST_CASE("correct_rank matches a sort oracle on random tables") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<test_util::RatioSpec> specs;
    const char* rooms[] = {"kitchen", "bedroom", "garage"};
    const char* recs[] = {"shelf", "counter", "bin", "table"};
    for (const char* room : rooms) {
      for (const char* rec : recs) {
        const double c = real01(rng);
        specs.push_back({"obj", room, rec, c, (1.0 - c) * 0.5,
                         1.0 + std::floor(real01(rng) * 3.0)});
      }
    }
    const PreferenceTable table = test_util::table_from_ratios(specs);
    // Independent oracle: sort correct keys by (mean, room, rec).
    std::vector<std::tuple<double, std::string, std::string>> oracle;
    for (const auto& s : specs) {
      if (s.c > 0.5) oracle.emplace_back(s.mean_rank, s.room, s.receptacle);
    }
    std::sort(oracle.begin(), oracle.end());
    for (size_t i = 0; i < oracle.size(); ++i) {
      CHECK(table.correct_rank("obj", std::get<1>(oracle[i]), std::get<2>(oracle[i])) ==
            static_cast<int>(i) + 1);
    }
  }
}

TEST_CASE("fleiss kappa: perfect agreement is 1") {
  std::vector<AnnotationRecord> annotations;
  for (int item = 0; item < 5; ++item) {
    const std::string rec = "rec" + std::to_string(item);
    const Bin bin = item % 2 == 0 ? Bin::Correct : Bin::Implausible;
    for (int a = 0; a < 10; ++a) {
      annotations.push_back(vote("a" + std::to_string(a), "fork", "kitchen", rec, bin,
                                 bin == Bin::Correct ? std::optional<int>(1) : std::nullopt));
    }
  }
  CHECK(fleiss_kappa(annotations, KappaMode::ThreeWay) == doctest::Approx(1.0));
  CHECK(fleiss_kappa(annotations, KappaMode::MergedBinary) == doctest::Approx(1.0));
}

TEST_CASE("fleiss kappa: 10 raters split 5/5 on every item gives -1/9") {
  // Direct formula: P-bar = 40/90, P_e = 1/2, kappa = -1/9.
  std::vector<AnnotationRecord> annotations;
  for (int item = 0; item < 6; ++item) {
    const std::string rec = "rec" + std::to_string(item);
    for (int a = 0; a < 10; ++a) {
      const Bin bin = a < 5 ? Bin::Correct : Bin::Implausible;
      annotations.push_back(vote("a" + std::to_string(a), "fork", "kitchen", rec, bin,
                                 bin == Bin::Correct ? std::optional<int>(1) : std::nullopt));
    }
  }
  const double kappa = fleiss_kappa(annotations, KappaMode::MergedBinary);
  CHECK(std::abs(kappa - (-1.0 / 9.0)) < 1e-12);
}

TEST_CASE("fleiss kappa: degenerate single-category input raises") {
  std::vector<AnnotationRecord> annotations;
  for (int item = 0; item < 4; ++item) {
    for (int a = 0; a < 10; ++a) {
      annotations.push_back(vote("a" + std::to_string(a), "fork", "kitchen",
                                 "rec" + std::to_string(item), Bin::Implausible));
    }
  }
  CHECK_THROWS_AS(fleiss_kappa(annotations, KappaMode::ThreeWay), DegenerateAgreement);
}

TEST_CASE("fleiss kappa: unequal rater counts raise") {
  std::vector<AnnotationRecord> annotations = votes_for_key(5, 5, 0);
  for (auto v : votes_for_key(3, 0, 0, "fork", "kitchen", "counter")) {
    annotations.push_back(v);
  }
  CHECK_THROWS_AS(fleiss_kappa(annotations, KappaMode::ThreeWay), UnequalRaterCounts);
}

TEST_CASE("fleiss kappa is invariant to item order and annotator relabeling") {
  Catalog catalog = synth::make_catalog({});
  SceneVocabulary vocab = {{"kitchen", {"counter", "shelf"}}, {"garage", {"bin", "toolrack"}}};
  SynthPrefConfig config;
  config.agreement = 0.6;
  auto annotations = synth_preferences(catalog, vocab, 123, config);
  const double base = fleiss_kappa(annotations, KappaMode::ThreeWay);

  Rng rng(9);
  shuffle(rng, annotations);
  CHECK(fleiss_kappa(annotations, KappaMode::ThreeWay) == doctest::Approx(base));

  for (auto& rec : annotations) rec.annotator = "renamed_" + rec.annotator;
  CHECK(fleiss_kappa(annotations, KappaMode::ThreeWay) == doctest::Approx(base));
}

TEST_CASE("synth preferences are deterministic and respect the agreement knob") {
  Catalog catalog = synth::make_catalog({});
  SceneVocabulary vocab = {{"kitchen", {"counter", "shelf", "sink"}},
                           {"bedroom", {"bed", "dresser"}},
                           {"garage", {"bin", "toolrack"}}};

  const auto a = synth_preferences(catalog, vocab, 42, {});
  const auto b = synth_preferences(catalog, vocab, 42, {});
  REQUIRE(a.size() == b.size());
  CHECK(annotations_to_csv(a) == annotations_to_csv(b));
  const auto c = synth_preferences(catalog, vocab, 43, {});
  CHECK(annotations_to_csv(a) != annotations_to_csv(c));

  SynthPrefConfig perfect;
  perfect.agreement = 1.0;
  const auto unanimous = synth_preferences(catalog, vocab, 1, perfect);
  CHECK(fleiss_kappa(unanimous, KappaMode::ThreeWay) == doctest::Approx(1.0));

  // Uniform voting: kappa near zero over plenty of items.
  SynthPrefConfig uniform;
  uniform.agreement = 0.0;
  uniform.ensure_majorities = false;
  const auto noisy = synth_preferences(catalog, vocab, 2, uniform);
  const size_t items = aggregate(noisy).entries.size();
  CHECK(items >= 200);
  CHECK(std::abs(fleiss_kappa(noisy, KappaMode::ThreeWay)) <= 0.05);
}

TEST_CASE("synth preferences guarantee a correct and a misplaced key per object") {
  Catalog catalog = synth::make_catalog({});
  SceneVocabulary vocab = {{"kitchen", {"counter", "shelf", "sink"}},
                           {"bedroom", {"bed", "dresser"}}};
  SynthPrefConfig config;
  config.agreement = 0.5;  // noisy, but majorities still forced
  const PreferenceTable table = aggregate(synth_preferences(catalog, vocab, 3, config));
  for (const auto& cat : catalog.categories) {
    bool has_correct = false, has_misplaced = false;
    for (const auto& [key, e] : table.entries) {
      if (key.object != cat.name) continue;
      if (e.c_or > 0.5) has_correct = true;
      if (e.m_or > 0.5) has_misplaced = true;
    }
    CHECK(has_correct);
    CHECK(has_misplaced);
  }
}

TEST_CASE("annotation CSV round trip") {
  Catalog catalog = synth::make_catalog({});
  SceneVocabulary vocab = {{"kitchen", {"counter", "shelf"}}};
  const auto annotations = synth_preferences(catalog, vocab, 4, {});
  const std::string csv = annotations_to_csv(annotations);
  const auto parsed = parse_annotations_csv(csv);
  REQUIRE(parsed.size() == annotations.size());
  CHECK(annotations_to_csv(parsed) == csv);

  CHECK_THROWS_AS(parse_annotations_csv("bogus header\n"), ParseError);
  CHECK_THROWS_AS(parse_annotations_csv(
                      "annotator,object,room,receptacle,bin,rank\na,b,c,d,nonsense,\n"),
                  ParseError);
}

TEST_CASE("preference table JSON round trip preserves every entry") {
  Catalog catalog = synth::make_catalog({});
  SceneVocabulary vocab = {{"kitchen", {"counter", "shelf", "sink"}}};
  const PreferenceTable table = aggregate(synth_preferences(catalog, vocab, 5, {}));
  const std::string json = preference_table_to_json(table);
  const PreferenceTable reloaded = preference_table_from_json(json);
  REQUIRE(reloaded.entries.size() == table.entries.size());
  for (const auto& [key, e] : table.entries) {
    const PrefEntry& r = reloaded.entries.at(key);
    CHECK(r.c_or == e.c_or);
    CHECK(r.m_or == e.m_or);
    CHECK(r.i_or == e.i_or);
    CHECK(r.n_annotators == e.n_annotators);
    CHECK(r.mean_correct_rank.has_value() == e.mean_correct_rank.has_value());
  }
  CHECK(preference_table_to_json(reloaded) == json);
}

TEST_CASE("filter_top_agreement keeps the k most majority-aligned annotators") {
  // 3 annotators agree, 1 dissents everywhere; keep 3 drops the dissenter.
  std::vector<AnnotationRecord> annotations;
  for (const char* rec : {"counter", "shelf"}) {
    for (int a = 0; a < 3; ++a) {
      annotations.push_back(vote("a" + std::to_string(a), "fork", "kitchen", rec,
                                 Bin::Correct, 1));
    }
    annotations.push_back(vote("dissenter", "fork", "kitchen", rec, Bin::Implausible));
  }
  const auto kept = filter_top_agreement(annotations, 3);
  CHECK(kept.size() == 6);
  for (const auto& rec : kept) CHECK(rec.annotator != "dissenter");
}
