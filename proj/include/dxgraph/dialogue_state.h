#ifndef DXGRAPH_DIALOGUE_STATE_H_
#define DXGRAPH_DIALOGUE_STATE_H_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dxgraph {

enum class Polarity { kPresent, kAbsent };

std::string_view to_string(Polarity polarity);
// Throws ArgumentError for anything but "present" / "absent".
Polarity polarity_from_string(std::string_view text);

struct SymptomEntry {
  std::string name;  // normalized term
  Polarity polarity = Polarity::kPresent;
  int turn = 0;

  friend bool operator==(const SymptomEntry &, const SymptomEntry &) = default;
};

struct ExamEntry {
  std::string name;
  std::string result;
  int turn = 0;

  friend bool operator==(const ExamEntry &, const ExamEntry &) = default;
};

struct Demographics {
  std::string age;
  std::string gender;

  friend bool operator==(const Demographics &, const Demographics &) = default;
};

// A polarity revision: `name` flipped from `from` to `to` at `turn`.
struct AuditEntry {
  std::string name;
  Polarity from = Polarity::kPresent;
  Polarity to = Polarity::kAbsent;
  int turn = 0;

  friend bool operator==(const AuditEntry &, const AuditEntry &) = default;
};

// OSCE-style diagnostic record. Symptom entries are kept in turn order; a
// revised entry moves to the end with its new turn.
struct OsceRecord {
  std::string chief_complaint;
  Demographics demographics;
  std::vector<SymptomEntry> symptoms;
  std::vector<ExamEntry> examinations;
  int revision = 0;
  std::vector<AuditEntry> audit;

  const SymptomEntry *find_symptom(std::string_view name) const;
  // Highest turn recorded in any list, 0 when empty.
  int last_turn() const;

  friend bool operator==(const OsceRecord &, const OsceRecord &) = default;
};

struct RecordUpdate {
  int turn = 0;
  std::vector<std::string> new_positives;
  std::vector<std::string> new_negatives;
  std::vector<std::pair<std::string, std::string>> new_exams;
};

struct PatientProfile {
  std::string age;
  std::string gender;
  std::string chief_complaint;
};

// Splits "30-year-old female" into ("30", "female"). Unrecognized text is
// kept whole as the age.
Demographics parse_demographics(std::string_view text);

// Throws ArgumentError on an empty chief complaint.
OsceRecord init_record(const PatientProfile &profile);

// Returns the updated record; `record` is untouched. Opposite-polarity
// mentions revise the entry (latest wins) and append an audit entry. An
// exam already on file with a different result is replaced.
// Throws OrderingError when update.turn precedes the record's last turn and
// ArgumentError when a term is both positive and negative.
OsceRecord apply_update(const OsceRecord &record, const RecordUpdate &update);

nlohmann::json to_json(const OsceRecord &record);
// Throws SchemaError on missing or mistyped fields.
OsceRecord record_from_json(const nlohmann::json &j);

}  // namespace dxgraph

#endif  // DXGRAPH_DIALOGUE_STATE_H_
