#include "dxgraph/case_file.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "dxgraph/entity_align.h"
#include "dxgraph/error.h"
#include "dxgraph/kg_store.h"

namespace dxgraph {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string render(const ordered_json &v);

std::string render_object(const ordered_json &obj) {
  std::string out;
  for (const auto &[key, value] : obj.items()) {
    if (!out.empty()) out += "; ";
    out += key + ": " + render(value);
  }
  return out;
}

std::string render(const ordered_json &v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object()) return render_object(v);
  if (v.is_array()) {
    std::string out;
    for (const ordered_json &item : v) {
      if (!out.empty()) out += ", ";
      out += render(item);
    }
    return out;
  }
  return v.dump();
}

// A repeated name (e.g. WBC in both blood count and urinalysis) keeps its
// first occurrence; the later one is still inside its parent's text.
void flatten(const ordered_json &obj, NamedText &out) {
  for (const auto &[key, value] : obj.items()) {
    bool seen = std::any_of(out.begin(), out.end(),
                            [&](const auto &e) { return e.first == key; });
    if (!seen) out.emplace_back(key, render(value));
    if (value.is_object()) flatten(value, out);
  }
}

class CaseReader {
 public:
  CaseReader(const ordered_json &j, std::size_t index)
      : j_(j), where_("case " + std::to_string(index)) {}

  const ordered_json &require(const ordered_json &obj, const char *key) const {
    if (!obj.is_object() || !obj.contains(key)) {
      throw SchemaError(where_ + ": missing field '" + key + "'");
    }
    return obj.at(key);
  }

  std::string string(const ordered_json &obj, const char *key) const {
    const ordered_json &v = require(obj, key);
    if (!v.is_string()) {
      throw SchemaError(where_ + ": field '" + key + "' must be a string");
    }
    return v.get<std::string>();
  }

  std::string optional_string(const ordered_json &obj, const char *key) const {
    if (!obj.is_object() || !obj.contains(key)) return "";
    return string(obj, key);
  }

  std::vector<std::string> strings(const ordered_json &obj,
                                   const char *key) const {
    std::vector<std::string> out;
    if (!obj.is_object() || !obj.contains(key)) return out;
    const ordered_json &v = obj.at(key);
    if (!v.is_array()) {
      throw SchemaError(where_ + ": field '" + key + "' must be an array");
    }
    for (const ordered_json &item : v) {
      if (!item.is_string()) {
        throw SchemaError(where_ + ": field '" + key +
                          "' must contain strings");
      }
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  NamedText named_text(const ordered_json &obj, const char *key) const {
    NamedText out;
    if (!obj.is_object() || !obj.contains(key)) return out;
    const ordered_json &v = obj.at(key);
    if (!v.is_object()) {
      throw SchemaError(where_ + ": field '" + key + "' must be an object");
    }
    flatten(v, out);
    return out;
  }

  void check(const CaseFile &c, const char *diagnosis_key,
             const char *primary_key) const {
    if (normalize_whitespace(c.correct_diagnosis).empty()) {
      throw SchemaError(where_ + ": field '" + diagnosis_key +
                        "' must not be empty");
    }
    if (normalize_whitespace(c.primary_symptom).empty()) {
      throw SchemaError(where_ + ": field '" + primary_key +
                        "' must not be empty");
    }
  }

  CaseFile osce(std::size_t index) const {
    const ordered_json &exam = require(j_, "OSCE Examination");
    const ordered_json &actor = require(exam, "Patient Actor");
    const ordered_json &symptoms = require(actor, "Symptoms");
    CaseFile c;
    c.id = j_.contains("id") ? string(j_, "id") : "case-" + std::to_string(index);
    c.demographics = parse_demographics(optional_string(actor, "Demographics"));
    c.history = optional_string(actor, "History");
    c.primary_symptom = string(symptoms, "Primary Symptom");
    for (const std::string &s : strings(symptoms, "Secondary Symptoms")) {
      std::string denied = strip_negation(s);
      if (denied.empty()) {
        c.secondary_symptoms.push_back(s);
      } else {
        add_denial(c, denied);
      }
    }
    for (const std::string &d :
         parse_denials(optional_string(actor, "Review of Systems"))) {
      add_denial(c, d);
    }
    c.physical_findings = named_text(exam, "Physical Examination Findings");
    c.test_results = named_text(exam, "Test Results");
    c.correct_diagnosis = string(exam, "Correct Diagnosis");
    check(c, "Correct Diagnosis", "Primary Symptom");
    return c;
  }

  CaseFile flat(std::size_t index) const {
    CaseFile c;
    c.id = j_.contains("id") ? string(j_, "id") : "case-" + std::to_string(index);
    if (j_.contains("demographics")) {
      const ordered_json &demo = j_.at("demographics");
      if (demo.is_string()) {
        c.demographics = parse_demographics(demo.get<std::string>());
      } else {
        c.demographics = {optional_string(demo, "age"),
                          optional_string(demo, "gender")};
      }
    }
    c.history = optional_string(j_, "history");
    const ordered_json &symptoms = require(j_, "symptoms");
    c.primary_symptom = string(symptoms, "primary");
    c.secondary_symptoms = strings(symptoms, "secondary");
    for (const std::string &d : strings(j_, "denied")) add_denial(c, d);
    c.physical_findings = named_text(j_, "physical_findings");
    c.test_results = named_text(j_, "test_results");
    c.correct_diagnosis = string(j_, "correct_diagnosis");
    check(c, "correct_diagnosis", "symptoms.primary");
    return c;
  }

 private:
  // "No vomiting" -> "vomiting"; returns "" for affirmative entries.
  static std::string strip_negation(const std::string &s) {
    std::string norm = normalize_term(s);
    for (std::string_view prefix : {"no ", "denies ", "without "}) {
      if (norm.rfind(prefix, 0) == 0) {
        return normalize_whitespace(s.substr(
            s.find_first_not_of(" \t") + prefix.size()));
      }
    }
    return "";
  }

  static void add_denial(CaseFile &c, const std::string &term) {
    std::string key = normalize_term(term);
    if (key.empty()) return;
    for (const std::string &d : c.denied) {
      if (normalize_term(d) == key) return;
    }
    c.denied.push_back(normalize_whitespace(term));
  }

  const ordered_json &j_;
  std::string where_;
};

}  // namespace

std::vector<std::string> parse_denials(std::string_view review_of_systems) {
  std::string text(review_of_systems);
  std::string lower = normalize_term(text);
  std::vector<std::string> out;
  std::size_t pos = lower.find("denies");
  if (pos == std::string::npos) return out;
  std::string rest = normalize_whitespace(text).substr(pos + 6);
  std::size_t stop = rest.find('.');
  if (stop != std::string::npos) rest = rest.substr(0, stop);
  // Split on commas, then strip a leading "or"/"and".
  std::size_t start = 0;
  while (start <= rest.size()) {
    std::size_t comma = rest.find(',', start);
    std::string item = normalize_whitespace(
        rest.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start));
    for (std::string_view conj : {"or ", "and "}) {
      if (normalize_term(item).rfind(conj, 0) == 0) {
        item = normalize_whitespace(item.substr(conj.size()));
      }
    }
    if (!item.empty()) {
      // "fever or chills" inside one item.
      std::size_t join = item.find(" or ");
      if (join == std::string::npos) join = item.find(" and ");
      if (join != std::string::npos) {
        std::size_t skip = item.compare(join, 4, " or ") == 0 ? 4 : 5;
        out.push_back(normalize_whitespace(item.substr(0, join)));
        out.push_back(normalize_whitespace(item.substr(join + skip)));
      } else {
        out.push_back(item);
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<CaseFile> parse_cases(const ordered_json &doc,
                                  std::vector<std::string> *warnings) {
  std::vector<CaseFile> cases;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const ordered_json &item = doc[i];
      if (!item.is_object()) {
        throw SchemaError("case " + std::to_string(i) + ": not an object");
      }
      CaseReader reader(item, i);
      cases.push_back(item.contains("OSCE Examination") ? reader.osce(i)
                                                        : reader.flat(i));
    }
  } else if (doc.is_object()) {
    CaseReader reader(doc, 0);
    cases.push_back(doc.contains("OSCE Examination") ? reader.osce(0)
                                                     : reader.flat(0));
  } else {
    throw SchemaError("case document must be an array or an object");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!ids.insert(cases[i].id).second) {
      throw SchemaError("case " + std::to_string(i) + ": duplicate id '" +
                        cases[i].id + "'");
    }
  }
  if (cases.empty() && warnings != nullptr) {
    warnings->push_back("case list is empty");
  }
  return cases;
}

std::vector<CaseFile> load_cases(std::istream &in,
                                 std::vector<std::string> *warnings) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const ordered_json::parse_error &e) {
    throw SchemaError(std::string("case file is not valid JSON: ") + e.what());
  }
  return parse_cases(doc, warnings);
}

std::vector<CaseFile> load_cases(const std::filesystem::path &path,
                                 std::vector<std::string> *warnings) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open case file " + path.string());
  return load_cases(in, warnings);
}

namespace {

ordered_json named_text_json(const NamedText &items) {
  ordered_json out = ordered_json::object();
  for (const auto &[name, text] : items) {
    if (!out.contains(name)) out[name] = text;
  }
  return out;
}

}  // namespace

ordered_json to_json(const CaseFile &c) {
  return ordered_json{
      {"id", c.id},
      {"demographics",
       {{"age", c.demographics.age}, {"gender", c.demographics.gender}}},
      {"history", c.history},
      {"symptoms",
       {{"primary", c.primary_symptom}, {"secondary", c.secondary_symptoms}}},
      {"denied", c.denied},
      {"physical_findings", named_text_json(c.physical_findings)},
      {"test_results", named_text_json(c.test_results)},
      {"correct_diagnosis", c.correct_diagnosis}};
}

void save_cases(const std::vector<CaseFile> &cases,
                const std::filesystem::path &path) {
  ordered_json doc = ordered_json::array();
  for (const CaseFile &c : cases) doc.push_back(to_json(c));
  std::ofstream out(path);
  if (!out) throw LookupError("cannot write case file " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace dxgraph
