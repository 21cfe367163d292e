#include "dxgraph/dialogue_state.h"

#include <algorithm>
#include <regex>
#include <set>

#include "dxgraph/entity_align.h"
#include "dxgraph/error.h"

namespace dxgraph {

using nlohmann::json;

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::kPresent ? "present" : "absent";
}

Polarity polarity_from_string(std::string_view text) {
  if (text == "present") return Polarity::kPresent;
  if (text == "absent") return Polarity::kAbsent;
  throw ArgumentError("invalid polarity '" + std::string(text) + "'");
}

const SymptomEntry *OsceRecord::find_symptom(std::string_view name) const {
  for (const SymptomEntry &e : symptoms) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

int OsceRecord::last_turn() const {
  int last = 0;
  for (const SymptomEntry &e : symptoms) last = std::max(last, e.turn);
  for (const ExamEntry &e : examinations) last = std::max(last, e.turn);
  return last;
}

Demographics parse_demographics(std::string_view text) {
  static const std::regex kPattern(R"(^\s*(\d+)\s*-?\s*year\s*-?\s*old\s+(\S+)\s*$)",
                                   std::regex::icase);
  std::string s(text);
  std::smatch m;
  if (std::regex_match(s, m, kPattern)) return {m[1].str(), m[2].str()};
  return {normalize_whitespace(s), ""};
}

OsceRecord init_record(const PatientProfile &profile) {
  std::string chief = normalize_whitespace(profile.chief_complaint);
  if (chief.empty()) throw ArgumentError("chief complaint must not be empty");
  OsceRecord record;
  record.chief_complaint = chief;
  record.demographics = {profile.age, profile.gender};
  return record;
}

OsceRecord apply_update(const OsceRecord &record, const RecordUpdate &update) {
  if (update.turn < record.last_turn()) {
    throw OrderingError("update for turn " + std::to_string(update.turn) +
                        " arrived after turn " +
                        std::to_string(record.last_turn()));
  }
  std::set<std::string> positives;
  for (const std::string &p : update.new_positives) {
    std::string key = normalize_term(p);
    if (!key.empty()) positives.insert(key);
  }
  for (const std::string &n : update.new_negatives) {
    if (positives.count(normalize_term(n)) != 0) {
      throw ArgumentError("'" + n + "' is both positive and negative");
    }
  }

  OsceRecord out = record;
  auto apply = [&](const std::string &raw, Polarity polarity) {
    std::string key = normalize_term(raw);
    if (key.empty()) return;
    auto it = std::find_if(out.symptoms.begin(), out.symptoms.end(),
                           [&](const SymptomEntry &e) { return e.name == key; });
    if (it == out.symptoms.end()) {
      out.symptoms.push_back({key, polarity, update.turn});
      return;
    }
    if (it->polarity == polarity) return;
    out.audit.push_back({key, it->polarity, polarity, update.turn});
    out.symptoms.erase(it);
    out.symptoms.push_back({key, polarity, update.turn});
  };
  for (const std::string &p : update.new_positives) apply(p, Polarity::kPresent);
  for (const std::string &n : update.new_negatives) apply(n, Polarity::kAbsent);
  for (const auto &[raw, result] : update.new_exams) {
    std::string name = normalize_whitespace(raw);
    if (name.empty()) continue;
    std::string key = normalize_term(name);
    auto it = std::find_if(out.examinations.begin(), out.examinations.end(),
                           [&](const ExamEntry &e) { return normalize_term(e.name) == key; });
    if (it != out.examinations.end()) {
      if (it->result == result) continue;
      out.examinations.erase(it);
    }
    out.examinations.push_back({name, result, update.turn});
  }
  ++out.revision;
  return out;
}

json to_json(const OsceRecord &record) {
  json symptoms = json::array();
  for (const SymptomEntry &e : record.symptoms) {
    symptoms.push_back(
        {{"name", e.name}, {"polarity", to_string(e.polarity)}, {"turn", e.turn}});
  }
  json exams = json::array();
  for (const ExamEntry &e : record.examinations) {
    exams.push_back({{"name", e.name}, {"result", e.result}, {"turn", e.turn}});
  }
  json audit = json::array();
  for (const AuditEntry &a : record.audit) {
    audit.push_back({{"name", a.name},
                     {"from", to_string(a.from)},
                     {"to", to_string(a.to)},
                     {"turn", a.turn}});
  }
  return json{{"chief_complaint", record.chief_complaint},
              {"demographics",
               {{"age", record.demographics.age},
                {"gender", record.demographics.gender}}},
              {"symptoms", std::move(symptoms)},
              {"examinations", std::move(exams)},
              {"revision", record.revision},
              {"audit", std::move(audit)}};
}

namespace {

template <typename T>
T field(const json &j, const char *key, const char *where) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw SchemaError(std::string(where) + ": field '" + key +
                      "' has the wrong type");
  }
}

Polarity polarity_field(const json &j, const char *key, const char *where) {
  try {
    return polarity_from_string(field<std::string>(j, key, where));
  } catch (const ArgumentError &e) {
    throw SchemaError(std::string(where) + ": " + e.what());
  }
}

}  // namespace

OsceRecord record_from_json(const json &j) {
  OsceRecord r;
  r.chief_complaint = field<std::string>(j, "chief_complaint", "record");
  json demo = field<json>(j, "demographics", "record");
  r.demographics = {field<std::string>(demo, "age", "demographics"),
                    field<std::string>(demo, "gender", "demographics")};
  for (const json &s : field<json>(j, "symptoms", "record")) {
    r.symptoms.push_back({field<std::string>(s, "name", "symptom"),
                          polarity_field(s, "polarity", "symptom"),
                          field<int>(s, "turn", "symptom")});
  }
  for (const json &e : field<json>(j, "examinations", "record")) {
    r.examinations.push_back({field<std::string>(e, "name", "examination"),
                              field<std::string>(e, "result", "examination"),
                              field<int>(e, "turn", "examination")});
  }
  r.revision = field<int>(j, "revision", "record");
  if (j.contains("audit")) {
    for (const json &a : j.at("audit")) {
      r.audit.push_back({field<std::string>(a, "name", "audit"),
                         polarity_field(a, "from", "audit"),
                         polarity_field(a, "to", "audit"),
                         field<int>(a, "turn", "audit")});
    }
  }
  return r;
}

}  // namespace dxgraph
