#include <sstream>

#include "doctest.h"
#include "dxgraph/case_file.h"
#include "dxgraph/error.h"
#include "support.h"

using namespace dxgraph;

namespace {

const std::string *find(const NamedText &list, const std::string &name) {
  for (const auto &[k, v] : list) {
    if (k == name) return &v;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("appendicitis case parses") {
  std::vector<CaseFile> cases = load_cases(testing::data("appendicitis.json"));
  REQUIRE(cases.size() == 1);
  const CaseFile &c = cases[0];
  CHECK(c.id == "appendicitis-01");
  CHECK(c.primary_symptom == "Sharp, right lower quadrant abdominal pain");
  CHECK(c.correct_diagnosis == "Acute Appendicitis");
  CHECK(c.demographics.age == "30");
  CHECK(c.demographics.gender == "female");
  CHECK(c.secondary_symptoms == std::vector<std::string>{"Nausea"});
  for (const char *d : {"fever", "vomiting", "diarrhea", "dysuria", "flank pain"}) {
    CHECK(std::find(c.denied.begin(), c.denied.end(), d) != c.denied.end());
  }
  const std::string *us = find(c.test_results, "Ultrasound Abdomen");
  REQUIRE(us != nullptr);
  CHECK(us->find("Enlarged appendix") != std::string::npos);
  CHECK(find(c.test_results, "Complete Blood Count") != nullptr);
  CHECK(find(c.physical_findings, "Palpation") != nullptr);
}

TEST_CASE("denial parsing") {
  CHECK(parse_denials("Denies fever, vomiting, diarrhea, dysuria, or flank pain.") ==
        std::vector<std::string>{"fever", "vomiting", "diarrhea", "dysuria", "flank pain"});
  CHECK(parse_denials("Unremarkable.").empty());
}

TEST_CASE("missing diagnosis is a schema error") {
  std::istringstream in(R"([{"id": "x", "symptoms": {"primary": "fever"}}])");
  CHECK_THROWS_AS(load_cases(in), SchemaError);
}

TEST_CASE("empty list warns") {
  std::istringstream in("[]");
  std::vector<std::string> warnings;
  CHECK(load_cases(in, &warnings).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("bad inputs") {
  std::istringstream broken("{");
  CHECK_THROWS_AS(load_cases(broken), SchemaError);
  CHECK_THROWS_AS(load_cases(std::filesystem::path("/nonexistent/cases.json")), LookupError);
  std::istringstream dup(R"([{"id":"a","symptoms":{"primary":"x"},"correct_diagnosis":"d"},
                             {"id":"a","symptoms":{"primary":"y"},"correct_diagnosis":"d"}])");
  CHECK_THROWS_AS(load_cases(dup), SchemaError);
}

TEST_CASE("flat schema round trip") {
  std::vector<CaseFile> cases = load_cases(testing::data("appendicitis.json"));
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const CaseFile &c : cases) j.push_back(to_json(c));
  CHECK(parse_cases(j) == cases);
}
