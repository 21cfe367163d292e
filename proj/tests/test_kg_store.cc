#include <sstream>

#include "doctest.h"
#include "dxgraph/error.h"
#include "dxgraph/kg_store.h"
#include "support.h"

using namespace dxgraph;

TEST_CASE("two-node graph loads") {
  std::istringstream nodes("D1\tdisease\tflu\nS1\tsymptom\tfever\n");
  std::istringstream edges("D1\tdisease_symptom\tS1\n");
  KnowledgeGraph kg = load_kg(nodes, edges);
  CHECK(kg.entities().size() == 2);
  CHECK(kg.edges().size() == 1);
  CHECK(kg.disease_ids() == std::vector<std::string>{"D1"});
  CHECK(kg.symptom_ids() == std::vector<std::string>{"S1"});
}

TEST_CASE("dangling edge names the missing id") {
  std::istringstream nodes("D1\tdisease\tflu\nS1\tsymptom\tfever\n");
  std::istringstream edges("D999\tdisease_symptom\tS1\n");
  try {
    load_kg(nodes, edges);
    FAIL("expected ValidationError");
  } catch (const ValidationError &e) {
    CHECK(std::string(e.what()).find("D999") != std::string::npos);
  }
}

TEST_CASE("malformed rows report their line") {
  std::istringstream nodes("# header\nD1\tdisease\tflu\nS1\tsymptom\n");
  std::istringstream edges("");
  try {
    load_kg(nodes, edges);
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
  std::istringstream n2("D1\tdisorder\tflu\n");
  std::istringstream e2("");
  CHECK_THROWS_AS(load_kg(n2, e2), ParseError);
  std::istringstream n3("D1\tdisease\tflu\nS1\tsymptom\tfever\n");
  std::istringstream e3("D1\tcauses\tS1\n");
  CHECK_THROWS_AS(load_kg(n3, e3), ParseError);
}

TEST_CASE("duplicate ids are rejected") {
  std::istringstream nodes("D1\tdisease\tflu\nD1\tdisease\tcold\n");
  std::istringstream edges("");
  CHECK_THROWS_AS(load_kg(nodes, edges), ValidationError);
}

TEST_CASE("edge kinds must match the relation") {
  std::istringstream nodes("D1\tdisease\tflu\nS1\tsymptom\tfever\n");
  std::istringstream edges("S1\tdisease_symptom\tD1\n");
  CHECK_THROWS_AS(load_kg(nodes, edges), ValidationError);
}

TEST_CASE("names keep case but lose extra whitespace") {
  std::istringstream nodes("D1\tdisease\t  Acute   Appendicitis \n");
  std::istringstream edges("");
  KnowledgeGraph kg = load_kg(nodes, edges);
  CHECK(kg.entity("D1").name == "Acute Appendicitis");
  CHECK(normalize_whitespace("\t a  b\n") == "a b");
}

TEST_CASE("neighbors on the tiny graph") {
  KnowledgeGraph kg = testing::tiny_kg();
  CHECK(neighbors(kg, "D1") == IdSet{"cough", "fever"});
  CHECK(neighbors(kg, "D2") == IdSet{"cough", "sneeze"});
  CHECK(&neighbors(kg, "D1") == &neighbors(kg, "D1"));
  CHECK(kg.symptom_degree("cough") == 2);
  CHECK(kg.symptom_degree("fever") == 1);
  CHECK_THROWS_AS(neighbors(kg, "fever"), LookupError);
  CHECK_THROWS_AS(neighbors(kg, "D9"), LookupError);
}

TEST_CASE("disease without symptoms has no neighbors") {
  std::istringstream nodes("D1\tdisease\tflu\nD2\tdisease\tlonely\nS1\tsymptom\tfever\n");
  std::istringstream edges("D1\tdisease_symptom\tS1\nD1\tdisease_disease\tD2\n");
  KnowledgeGraph kg = load_kg(nodes, edges);
  CHECK(neighbors(kg, "D2").empty());
  // disease-disease edges load but do not count as symptoms
  CHECK(neighbors(kg, "D1") == IdSet{"S1"});
}

TEST_CASE("subgraph of the tiny graph") {
  KnowledgeGraph kg = testing::tiny_kg();
  std::vector<std::string> both{"D1", "D2"};
  DiagnosticSubgraph sub = build_subgraph(kg, both);
  CHECK(sub.diseases() == both);
  CHECK(sub.symptoms() == IdSet{"cough", "fever", "sneeze"});
  CHECK(sub.neighbors("D1") == IdSet{"cough", "fever"});
  CHECK(sub.neighbors("D2") == IdSet{"cough", "sneeze"});

  std::vector<std::string> one{"D1"};
  CHECK(build_subgraph(kg, one).symptoms() == IdSet{"cough", "fever"});

  std::vector<std::string> bad{"D1", "fever"};
  CHECK_THROWS_AS(build_subgraph(kg, bad), ArgumentError);
  std::vector<std::string> none;
  CHECK_THROWS_AS(build_subgraph(kg, none), ArgumentError);
  std::vector<std::string> dup{"D1", "D1"};
  CHECK_THROWS_AS(build_subgraph(kg, dup), ArgumentError);
}

TEST_CASE("subgraph symptoms are the union of adjacency") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    testing::RandomGraph g = testing::random_graph(rng, 6, 12);
    DiagnosticSubgraph sub = DiagnosticSubgraph::from_adjacency(g.diseases, g.adjacency);
    IdSet all;
    for (const auto &[d, n] : sub.adjacency()) all.insert(n.begin(), n.end());
    CHECK(all == sub.symptoms());
  }
}

TEST_CASE("save then load is the identity") {
  KnowledgeGraph kg = testing::abdo_kg();
  std::ostringstream n, e;
  save_kg(kg, n, e);
  std::istringstream n2(n.str()), e2(e.str());
  KnowledgeGraph back = load_kg(n2, e2);
  CHECK(back.entities() == kg.entities());
  CHECK(back.edges() == kg.edges());
}
