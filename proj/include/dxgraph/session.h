#ifndef DXGRAPH_SESSION_H_
#define DXGRAPH_SESSION_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dxgraph/case_file.h"
#include "dxgraph/dialogue_state.h"
#include "dxgraph/entity_align.h"
#include "dxgraph/error.h"
#include "dxgraph/inference.h"
#include "dxgraph/kg_store.h"
#include "json.hpp"

namespace dxgraph {

// How the next symptom question is picked from the eligible set.
enum class QuestionPolicy { kInfoGain, kRandom, kDegreeBased };

std::string_view to_string(QuestionPolicy policy);
// Accepts "info-gain", "random", "degree" (and "degree-based").
QuestionPolicy policy_from_string(std::string_view text);

struct SessionConfig {
  int t_max = 20;
  int stagnation_n = 3;
  InferenceConfig inference;
  AlignConfig align;
  std::uint64_t seed = 0;
  QuestionPolicy policy = QuestionPolicy::kInfoGain;

  void validate() const;
};

enum class TerminationReason { kTurnLimit, kStagnationNoRefuter, kExhausted };
std::string_view to_string(TerminationReason reason);

// Result of check_termination. kStagnationPending is not terminal: it asks
// the session to look for a refuting question first.
enum class TerminationCheck { kTurnLimit, kStagnationPending, kExhausted };

enum class AnswerPolarity { kPresent, kAbsent, kUnknown };
std::string_view to_string(AnswerPolarity polarity);

struct Question {
  std::string symptom;  // KG id
  std::string name;
  double ig = 0.0;
  bool refutation = false;
};

struct TurnLog {
  int turn = 0;
  std::string question;
  std::string question_name;
  bool refutation = false;
  StructuredAnswer answer;
  AnswerPolarity polarity = AnswerPolarity::kUnknown;
  std::vector<DiseaseProbability> differential_after;
  double ig_of_question = 0.0;
  int record_revision = 0;
};

nlohmann::json to_json(const TurnLog &log);
// One TurnLog per line.
std::string trace_to_jsonl(const std::vector<TurnLog> &trace);

struct SessionOutcome {
  std::string final_diagnosis;
  int rounds = 0;
  TerminationReason reason = TerminationReason::kExhausted;
  std::vector<TurnLog> trace;
  bool degraded_start = false;
  OsceRecord record;
};

// Oracle failure or malformed answer mid-session. Carries the turns that
// completed before the failure.
class SessionError : public Error {
 public:
  SessionError(const std::string &what, std::vector<TurnLog> partial)
      : Error(what), partial_trace_(std::move(partial)) {}
  const std::vector<TurnLog> &partial_trace() const { return partial_trace_; }

 private:
  std::vector<TurnLog> partial_trace_;
};

class PatientOracle {
 public:
  virtual ~PatientOracle() = default;
  virtual StructuredAnswer answer(const KgEntity &symptom) = 0;
};

// Scripted patient: affirms exactly the case symptoms that align to KG
// symptoms and denies everything else. Only ever names the asked symptom.
class CasePatientOracle final : public PatientOracle {
 public:
  CasePatientOracle(const CaseFile &c, const Aligner &aligner);
  StructuredAnswer answer(const KgEntity &symptom) override;
  const IdSet &positives() const { return positives_; }

 private:
  IdSet positives_;
};

inline constexpr std::string_view kNormalReadings = "NORMAL READINGS";

class MeasurementOracle {
 public:
  virtual ~MeasurementOracle() = default;
  virtual std::string result(std::string_view exam) const = 0;
};

// Looks the exam up among the case's test results (exact, then edit
// distance <= 3 on normalized names); otherwise kNormalReadings.
class CaseMeasurementOracle final : public MeasurementOracle {
 public:
  explicit CaseMeasurementOracle(NamedText test_results);
  std::string result(std::string_view exam) const override;

 private:
  NamedText results_;
};

// One consultation. Each turn re-proposes candidates from the accumulated
// evidence, recomputes the posterior, and picks the next question; answers
// arrive through answer(), from an oracle or a human.
class Consultation {
 public:
  // `reported` holds the symptoms known up front (the chief complaint);
  // those that align to KG symptoms seed S_pos. `aligner` must outlive the
  // consultation.
  Consultation(const Aligner &aligner, SessionConfig cfg,
               PatientProfile profile, std::vector<std::string> reported);

  const SessionConfig &config() const { return cfg_; }
  const KnowledgeGraph &kg() const { return aligner_->kg(); }
  const EvidenceState &evidence() const { return evidence_; }
  const OsceRecord &record() const { return record_; }
  const DifferentialSet &differential() const { return current_.posterior; }
  const DiagnosticSubgraph &subgraph() const { return current_.subgraph; }
  const std::vector<TurnLog> &trace() const { return trace_; }
  bool degraded_start() const { return degraded_start_; }

  // The question awaiting an answer; empty once terminated.
  const std::optional<Question> &pending() const { return pending_; }
  bool terminated() const { return reason_.has_value(); }
  const std::optional<TerminationReason> &reason() const { return reason_; }

  InquiryPlan plan() const;

  // Folds the answer to the pending question into evidence and the record,
  // then computes the next question or terminates. Throws ArgumentError for
  // a contradictory answer and LookupError when terminated.
  const TurnLog &answer(const StructuredAnswer &answer);
  const TurnLog &answer(AnswerPolarity polarity);

  // Records an examination result; does not consume a turn.
  std::string request_exam(std::string_view exam,
                           const MeasurementOracle &oracle);

  SessionOutcome outcome() const;

 private:
  void refresh();
  void advance();
  std::optional<Question> choose(const std::vector<std::string> &pool,
                                 bool refutation);

  const Aligner *aligner_;
  SessionConfig cfg_;
  EvidenceState evidence_;
  OsceRecord record_;
  Differential current_;
  std::vector<TurnLog> trace_;
  std::optional<Question> pending_;
  std::optional<TerminationReason> reason_;
  bool degraded_start_ = false;
  std::mt19937_64 rng_;
};

std::optional<TerminationCheck> check_termination(const Consultation &session);

// Unasked subgraph symptoms whose answer opposite to what the leader
// predicts (present iff the symptom is adjacent to the leader) would move
// the posterior argmax. Sorted by descending IG, ties by id.
std::vector<std::string> refutation_candidates(const DifferentialSet &d,
                                               const DiagnosticSubgraph &sub,
                                               const EvidenceState &evidence,
                                               const InferenceConfig &cfg);

// Asks the pending question through the oracle. Throws SessionError when
// the oracle fails or answers inconsistently.
TurnLog step(Consultation &session, PatientOracle &oracle);

PatientProfile profile_from_case(const CaseFile &c);

SessionOutcome run_session(const CaseFile &c, const Aligner &aligner,
                           const SessionConfig &cfg);
SessionOutcome run_session(const CaseFile &c, const KnowledgeGraph &kg,
                           const EmbeddingProvider *provider,
                           const SessionConfig &cfg);

}  // namespace dxgraph

#endif  // DXGRAPH_SESSION_H_
