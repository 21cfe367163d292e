#ifndef DXGRAPH_CASE_FILE_H_
#define DXGRAPH_CASE_FILE_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dxgraph/dialogue_state.h"
#include "json.hpp"

namespace dxgraph {

using NamedText = std::vector<std::pair<std::string, std::string>>;

// One examination case: what the simulated patient knows, what the
// measurement reader can report, and the ground-truth diagnosis.
struct CaseFile {
  std::string id;
  Demographics demographics;
  std::string history;
  std::string primary_symptom;
  std::vector<std::string> secondary_symptoms;
  std::vector<std::string> denied;
  // Flattened "name -> text" maps; nested sections are listed under their
  // own names as well as inside their parent's text.
  NamedText physical_findings;
  NamedText test_results;
  std::string correct_diagnosis;

  friend bool operator==(const CaseFile &, const CaseFile &) = default;
};

// Accepts a JSON array of cases or a single case. Each case is either the
// OSCE shape (`{"OSCE Examination": {...}}`) or the flat shape
// `{id, demographics, history, symptoms: {primary, secondary}, denied,
// physical_findings, test_results, correct_diagnosis}`.
// Throws SchemaError naming the case index and field.
std::vector<CaseFile> parse_cases(const nlohmann::ordered_json &doc,
                                  std::vector<std::string> *warnings = nullptr);
std::vector<CaseFile> load_cases(std::istream &in,
                                 std::vector<std::string> *warnings = nullptr);
// Throws LookupError when the file cannot be opened.
std::vector<CaseFile> load_cases(const std::filesystem::path &path,
                                 std::vector<std::string> *warnings = nullptr);

// Flat schema.
nlohmann::ordered_json to_json(const CaseFile &c);
void save_cases(const std::vector<CaseFile> &cases,
                const std::filesystem::path &path);

// "Denies fever, vomiting, or flank pain." -> {fever, vomiting, flank pain}
std::vector<std::string> parse_denials(std::string_view review_of_systems);

}  // namespace dxgraph

#endif  // DXGRAPH_CASE_FILE_H_
