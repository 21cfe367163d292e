#include <random>
#include <sstream>

#include "doctest.h"
#include "dxgraph/entity_align.h"
#include "dxgraph/error.h"
#include "oracle.h"
#include "support.h"

using namespace dxgraph;

namespace {

KnowledgeGraph graph(const std::vector<std::pair<std::string, std::string>> &diseases,
                     const std::vector<std::pair<std::string, std::string>> &symptoms = {}) {
  std::vector<KgEntity> es;
  for (const auto &[id, name] : diseases) es.push_back({id, name, EntityKind::kDisease});
  for (const auto &[id, name] : symptoms) es.push_back({id, name, EntityKind::kSymptom});
  return KnowledgeGraph(es, {});
}

TableEmbeddingProvider fixture_vectors() {
  return TableEmbeddingProvider::load(testing::data("vectors.tsv"));
}

}  // namespace

TEST_CASE("normalize_term") {
  CHECK(normalize_term("  Acute   Appendicitis ") == "acute appendicitis");
  CHECK(normalize_term("fever") == "fever");
  CHECK(normalize_term("") == "");
  CHECK(normalize_term("Fever", true) == "Fever");
}

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein("fever", "fever") == 0);
  CHECK(levenshtein("fevr", "fever") == 1);
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(oracle::levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("levenshtein is a metric on random strings") {
  std::mt19937_64 rng(5);
  auto word = [&] {
    std::string s(rng() % 9, 'a');
    for (char &c : s) c = static_cast<char>('a' + rng() % 4);
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    std::string a = word(), b = word(), c = word();
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK(levenshtein(a, a) == 0);
    CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST_CASE("exact stage, case-insensitive") {
  KnowledgeGraph kg = graph({{"D1", "Acute Appendicitis"}, {"D2", "Cholecystitis"}});
  AlignmentResult r = align("Acute Appendicitis", kg, EntityKind::kDisease, nullptr);
  CHECK(r.stage == AlignStage::kExact);
  CHECK(r.matched == "D1");
  CHECK(r.score == 0.0);
  CHECK(align("  acute  APPENDICITIS", kg, EntityKind::kDisease, nullptr).matched == "D1");
}

TEST_CASE("edit-distance stage") {
  KnowledgeGraph kg = graph({{"D1", "Acute Appendicitis"}});
  AlignmentResult r = align("acute apendicitis", kg, EntityKind::kDisease, nullptr);
  CHECK(r.stage == AlignStage::kEditDistance);
  CHECK(r.matched == "D1");
  CHECK(r.score == 1.0);
}

TEST_CASE("edit distance 3 accepted, 4 rejected") {
  KnowledgeGraph kg = graph({{"D1", "bronchitis"}});
  REQUIRE(oracle::levenshtein("brxnchxtxs", "bronchitis") == 3);
  REQUIRE(oracle::levenshtein("brxnchxtxx", "bronchitis") == 4);
  AlignmentResult hit = align("brxnchxtxs", kg, EntityKind::kDisease, nullptr);
  CHECK(hit.stage == AlignStage::kEditDistance);
  CHECK(hit.score == 3.0);
  AlignmentResult miss = align("brxnchxtxx", kg, EntityKind::kDisease, nullptr);
  CHECK(miss.stage == AlignStage::kNone);
  CHECK_FALSE(miss.matched);
}

TEST_CASE("edit-distance ties go to the smaller id") {
  KnowledgeGraph kg = graph({{"B", "cat"}, {"A", "cot"}});
  AlignmentResult r = align("cut", kg, EntityKind::kDisease, nullptr);
  CHECK(r.stage == AlignStage::kEditDistance);
  CHECK(r.matched == "A");
}

TEST_CASE("alignment respects entity kind") {
  KnowledgeGraph kg = graph({{"D1", "fever"}}, {{"S1", "cough"}});
  CHECK_FALSE(align("fever", kg, EntityKind::kSymptom, nullptr).matched);
  CHECK(align("fever", kg, EntityKind::kDisease, nullptr).matched == "D1");
}

TEST_CASE("embedding stage and the tau boundary") {
  KnowledgeGraph kg = graph({{"MI", "heart attack"}});
  TableEmbeddingProvider vectors = fixture_vectors();

  AlignmentResult r = align("myocardial infarction", kg, EntityKind::kDisease, &vectors);
  CHECK(r.stage == AlignStage::kEmbedding);
  CHECK(r.matched == "MI");
  CHECK(r.score == 0.91);

  AlignmentResult at = align("boundary hit", kg, EntityKind::kDisease, &vectors);
  CHECK(at.stage == AlignStage::kEmbedding);
  CHECK(at.score == 0.85);

  AlignmentResult below = align("near miss", kg, EntityKind::kDisease, &vectors);
  CHECK(below.stage == AlignStage::kNone);
  CHECK_FALSE(below.matched);

  // no provider, no embedding stage
  CHECK(align("myocardial infarction", kg, EntityKind::kDisease, nullptr).stage ==
        AlignStage::kNone);
}

TEST_CASE("queries the provider cannot embed fall through to none") {
  KnowledgeGraph kg = graph({{"MI", "heart attack"}});
  TableEmbeddingProvider vectors = fixture_vectors();
  CHECK(align("something else", kg, EntityKind::kDisease, &vectors).stage ==
        AlignStage::kNone);
}

TEST_CASE("exact match wins over a near-duplicate decoy") {
  KnowledgeGraph kg = graph({{"D1", "fevers"}, {"D2", "fever"}, {"D0", "fever x"}});
  TrigramHashProvider hash;
  AlignmentResult r = align("fever", kg, EntityKind::kDisease, &hash);
  CHECK(r.stage == AlignStage::kExact);
  CHECK(r.matched == "D2");
}

TEST_CASE("empty query runs no stage") {
  KnowledgeGraph kg = graph({{"D1", "a"}});
  TrigramHashProvider hash;
  AlignmentResult r = align("   ", kg, EntityKind::kDisease, &hash);
  CHECK(r.stage == AlignStage::kNone);
  CHECK_FALSE(r.matched);
}

TEST_CASE("raising tau never creates a match") {
  KnowledgeGraph kg = testing::abdo_kg();
  TrigramHashProvider hash;
  std::vector<std::string> queries{"abdominal ache", "painful urination", "throwing up",
                                   "pain in the pelvis", "high temperature", "nauseous",
                                   "right lower quadrant pain", "bleeding"};
  for (double lo : {0.3, 0.5, 0.7, 0.85}) {
    for (double hi : {0.86, 0.9, 0.99}) {
      AlignConfig a, b;
      a.tau = lo;
      b.tau = hi;
      for (const std::string &q : queries) {
        AlignmentResult low = align(q, kg, EntityKind::kSymptom, &hash, a);
        AlignmentResult high = align(q, kg, EntityKind::kSymptom, &hash, b);
        if (!low.matched) CHECK_FALSE(high.matched);
      }
    }
  }
}

TEST_CASE("aligner caches agree with the free function") {
  KnowledgeGraph kg = testing::abdo_kg();
  TrigramHashProvider hash;
  Aligner aligner(kg, &hash);
  for (const std::string q : {"nausea", "vomitting", "pelvic pains", "blood in urine"}) {
    AlignmentResult a = aligner.align(q, EntityKind::kSymptom);
    AlignmentResult b = align(q, kg, EntityKind::kSymptom, &hash);
    CHECK(a.matched == b.matched);
    CHECK(a.stage == b.stage);
    CHECK(a.score == b.score);
  }
}

TEST_CASE("align config validation") {
  AlignConfig c;
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.tau = 1.0;
  c.max_edit_distance = -1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("vector table parsing") {
  TableEmbeddingProvider v = fixture_vectors();
  CHECK(v.dimension() == 5);
  CHECK(v.embed("Heart  Attack") == std::vector<double>{1, 0, 0, 0, 0});
  CHECK_THROWS_AS(v.embed("unknown"), AlignmentError);

  std::istringstream no_header("a\t1,2\n");
  CHECK_THROWS_AS(TableEmbeddingProvider::load(no_header), ParseError);
  std::istringstream wrong_dim("#dim=3\na\t1,2\n");
  CHECK_THROWS_AS(TableEmbeddingProvider::load(wrong_dim), ParseError);
  CHECK_THROWS_AS(TableEmbeddingProvider::load(std::filesystem::path("/nonexistent/v.tsv")),
                  LookupError);
}

TEST_CASE("trigram provider is deterministic") {
  TrigramHashProvider a(64), b(64);
  CHECK(a.embed("Abdominal pain") == b.embed("abdominal  pain"));
  CHECK(a.embed("x").size() == 64);
  std::vector<double> p = a.embed("abdominal pain");
  CHECK(cosine(p, p) == doctest::Approx(1.0));
  std::vector<double> zero(3, 0.0), one{1, 0, 0};
  CHECK(cosine(zero, one) == 0.0);
}

TEST_CASE("extract_mentions") {
  Mentions m = extract_mentions({{"fever"}, {}});
  CHECK(m.positives == std::vector<std::string>{"fever"});
  CHECK(m.negatives.empty());
  m = extract_mentions({{}, {"vomiting"}});
  CHECK(m.positives.empty());
  CHECK(m.negatives == std::vector<std::string>{"vomiting"});
  CHECK_THROWS_AS(extract_mentions({{"nausea"}, {"nausea"}}), ArgumentError);
  CHECK(StructuredAnswer{}.empty());
}
