#include "dxgraph/session.h"

#include <algorithm>
#include <limits>
#include <sstream>

namespace dxgraph {

using nlohmann::json;

std::string_view to_string(QuestionPolicy policy) {
  switch (policy) {
    case QuestionPolicy::kInfoGain: return "info-gain";
    case QuestionPolicy::kRandom: return "random";
    case QuestionPolicy::kDegreeBased: return "degree";
  }
  return "info-gain";
}

QuestionPolicy policy_from_string(std::string_view text) {
  if (text == "info-gain" || text == "infogain") return QuestionPolicy::kInfoGain;
  if (text == "random") return QuestionPolicy::kRandom;
  if (text == "degree" || text == "degree-based") {
    return QuestionPolicy::kDegreeBased;
  }
  throw ArgumentError("unknown policy '" + std::string(text) + "'");
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kTurnLimit: return "turn_limit";
    case TerminationReason::kStagnationNoRefuter: return "stagnation_no_refuter";
    case TerminationReason::kExhausted: return "exhausted";
  }
  return "exhausted";
}

std::string_view to_string(AnswerPolarity polarity) {
  switch (polarity) {
    case AnswerPolarity::kPresent: return "present";
    case AnswerPolarity::kAbsent: return "absent";
    case AnswerPolarity::kUnknown: return "unknown";
  }
  return "unknown";
}

void SessionConfig::validate() const {
  if (t_max < 1) throw ArgumentError("t_max must be >= 1");
  if (stagnation_n < 1) throw ArgumentError("stagnation_n must be >= 1");
  inference.validate();
  align.validate();
}

json to_json(const TurnLog &log) {
  json differential = json::array();
  for (const DiseaseProbability &e : log.differential_after) {
    differential.push_back({{"disease", e.disease}, {"probability", e.probability}});
  }
  return json{{"turn", log.turn},
              {"question", log.question},
              {"question_name", log.question_name},
              {"refutation", log.refutation},
              {"answer", {{"asserted", log.answer.asserted},
                          {"denied", log.answer.denied}}},
              {"polarity", to_string(log.polarity)},
              {"differential_after", std::move(differential)},
              {"ig_of_question", log.ig_of_question},
              {"record_revision", log.record_revision}};
}

std::string trace_to_jsonl(const std::vector<TurnLog> &trace) {
  std::string out;
  for (const TurnLog &log : trace) {
    out += to_json(log).dump();
    out += '\n';
  }
  return out;
}

// -- Oracles -----------------------------------------------------------------

CasePatientOracle::CasePatientOracle(const CaseFile &c, const Aligner &aligner) {
  auto add = [&](const std::string &term) {
    AlignmentResult r = aligner.align(term, EntityKind::kSymptom);
    if (r.matched) positives_.insert(*r.matched);
  };
  add(c.primary_symptom);
  for (const std::string &s : c.secondary_symptoms) add(s);
}

StructuredAnswer CasePatientOracle::answer(const KgEntity &symptom) {
  if (symptom.kind != EntityKind::kSymptom) {
    throw ArgumentError("patient can only be asked about symptoms");
  }
  if (positives_.count(symptom.id) != 0) return {{symptom.name}, {}};
  return {{}, {symptom.name}};
}

CaseMeasurementOracle::CaseMeasurementOracle(NamedText test_results)
    : results_(std::move(test_results)) {}

std::string CaseMeasurementOracle::result(std::string_view exam) const {
  std::string key = normalize_term(exam);
  if (key.empty()) return std::string(kNormalReadings);
  for (const auto &[name, text] : results_) {
    if (normalize_term(name) == key) return text;
  }
  std::size_t best = 4;
  const std::string *found = nullptr;
  for (const auto &[name, text] : results_) {
    std::size_t d = levenshtein(key, normalize_term(name));
    if (d < best) {
      best = d;
      found = &text;
    }
  }
  return found != nullptr ? *found : std::string(kNormalReadings);
}

// -- Consultation ------------------------------------------------------------

Consultation::Consultation(const Aligner &aligner, SessionConfig cfg,
                           PatientProfile profile,
                           std::vector<std::string> reported)
    : aligner_(&aligner), cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.validate();
  record_ = init_record(profile);
  std::vector<std::string> recorded;
  for (const std::string &term : reported) {
    if (normalize_term(term).empty()) continue;
    recorded.push_back(term);
    AlignmentResult r = aligner.align(term, EntityKind::kSymptom);
    if (r.matched) evidence_.add_positive(*r.matched);
  }
  degraded_start_ = evidence_.s_pos().empty();
  if (!recorded.empty()) {
    record_ = apply_update(record_, RecordUpdate{0, recorded, {}, {}});
  }
  refresh();
  advance();
}

void Consultation::refresh() {
  current_ = compute_differential(kg(), evidence_, aligner_->provider(),
                                  cfg_.inference);
}

InquiryPlan Consultation::plan() const {
  return rank_inquiries(current_.subgraph, current_.posterior, evidence_,
                        cfg_.inference);
}

std::optional<Question> Consultation::choose(
    const std::vector<std::string> &pool, bool refutation) {
  if (pool.empty()) return std::nullopt;
  std::string chosen;
  if (refutation) {
    // Refuters arrive IG-ordered; every policy takes the strongest one.
    chosen = pool.front();
  } else {
    switch (cfg_.policy) {
      case QuestionPolicy::kInfoGain:
        chosen = score_inquiries(current_.subgraph, current_.posterior,
                                 evidence_, cfg_.inference)
                     .front()
                     .symptom;
        break;
      case QuestionPolicy::kRandom: {
        std::vector<std::string> sorted = pool;
        std::sort(sorted.begin(), sorted.end());
        chosen = sorted[rng_() % sorted.size()];
        break;
      }
      case QuestionPolicy::kDegreeBased: {
        std::size_t best = 0;
        for (const std::string &s : pool) {
          std::size_t degree = kg().symptom_degree(s);
          if (chosen.empty() || degree > best ||
              (degree == best && s < chosen)) {
            best = degree;
            chosen = s;
          }
        }
        break;
      }
    }
  }
  Question q;
  q.symptom = chosen;
  q.name = kg().entity(chosen).name;
  q.ig = information_gain(current_.subgraph, current_.posterior, chosen,
                          cfg_.inference);
  q.refutation = refutation;
  return q;
}

void Consultation::advance() {
  pending_.reset();
  std::optional<TerminationCheck> check = check_termination(*this);
  if (!check) {
    pending_ = choose(eligible_symptoms(current_.subgraph, evidence_), false);
    return;
  }
  switch (*check) {
    case TerminationCheck::kTurnLimit:
      reason_ = TerminationReason::kTurnLimit;
      return;
    case TerminationCheck::kExhausted:
      reason_ = TerminationReason::kExhausted;
      return;
    case TerminationCheck::kStagnationPending: {
      std::vector<std::string> refuters = refutation_candidates(
          current_.posterior, current_.subgraph, evidence_, cfg_.inference);
      pending_ = choose(refuters, true);
      if (!pending_) reason_ = TerminationReason::kStagnationNoRefuter;
      return;
    }
  }
}

const TurnLog &Consultation::answer(const StructuredAnswer &answer) {
  if (!pending_) throw LookupError("session has terminated");
  const Question q = *pending_;
  Mentions mentions = extract_mentions(answer);

  AnswerPolarity polarity = AnswerPolarity::kUnknown;
  for (const std::string &p : mentions.positives) {
    AlignmentResult r = aligner_->align(p, EntityKind::kSymptom);
    if (r.matched == q.symptom) polarity = AnswerPolarity::kPresent;
  }
  for (const std::string &n : mentions.negatives) {
    AlignmentResult r = aligner_->align(n, EntityKind::kSymptom);
    if (r.matched == q.symptom) polarity = AnswerPolarity::kAbsent;
  }

  const int turn = static_cast<int>(trace_.size()) + 1;
  evidence_.mark_asked(q.symptom);
  if (polarity == AnswerPolarity::kPresent) evidence_.add_positive(q.symptom);
  if (polarity == AnswerPolarity::kAbsent) evidence_.add_negative(q.symptom);
  record_ = apply_update(
      record_, RecordUpdate{turn, mentions.positives, mentions.negatives, {}});
  refresh();

  TurnLog log;
  log.turn = turn;
  log.question = q.symptom;
  log.question_name = q.name;
  log.refutation = q.refutation;
  log.answer = answer;
  log.polarity = polarity;
  log.differential_after = current_.posterior.entries();
  log.ig_of_question = q.ig;
  log.record_revision = record_.revision;
  trace_.push_back(std::move(log));
  advance();
  return trace_.back();
}

const TurnLog &Consultation::answer(AnswerPolarity polarity) {
  if (!pending_) throw LookupError("session has terminated");
  StructuredAnswer a;
  if (polarity == AnswerPolarity::kPresent) a.asserted.push_back(pending_->name);
  if (polarity == AnswerPolarity::kAbsent) a.denied.push_back(pending_->name);
  return answer(a);
}

std::string Consultation::request_exam(std::string_view exam,
                                       const MeasurementOracle &oracle) {
  if (terminated()) throw LookupError("session has terminated");
  std::string result = oracle.result(exam);
  record_ = apply_update(
      record_, RecordUpdate{record_.last_turn(), {}, {}, {{std::string(exam), result}}});
  return result;
}

SessionOutcome Consultation::outcome() const {
  SessionOutcome out;
  out.final_diagnosis = current_.posterior.leader();
  out.rounds = static_cast<int>(trace_.size());
  out.reason = reason_.value_or(TerminationReason::kTurnLimit);
  out.trace = trace_;
  out.degraded_start = degraded_start_;
  out.record = record_;
  return out;
}

// -- Free functions ----------------------------------------------------------

std::optional<TerminationCheck> check_termination(const Consultation &session) {
  const SessionConfig &cfg = session.config();
  const std::vector<TurnLog> &trace = session.trace();
  if (static_cast<int>(trace.size()) >= cfg.t_max) {
    return TerminationCheck::kTurnLimit;
  }
  if (eligible_symptoms(session.subgraph(), session.evidence()).empty()) {
    return TerminationCheck::kExhausted;
  }
  const auto n = static_cast<std::size_t>(cfg.stagnation_n);
  if (trace.size() >= n) {
    auto ids = [](const TurnLog &log) {
      std::vector<std::string> out;
      for (const DiseaseProbability &e : log.differential_after) {
        out.push_back(e.disease);
      }
      // compare as sets; order among near-zero tails churns every turn
      std::sort(out.begin(), out.end());
      return out;
    };
    const std::vector<std::string> last = ids(trace.back());
    bool same = true;
    for (std::size_t i = trace.size() - n; i + 1 < trace.size() && same; ++i) {
      same = ids(trace[i]) == last;
    }
    if (same) return TerminationCheck::kStagnationPending;
  }
  return std::nullopt;
}

std::vector<std::string> refutation_candidates(const DifferentialSet &d,
                                               const DiagnosticSubgraph &sub,
                                               const EvidenceState &evidence,
                                               const InferenceConfig &cfg) {
  if (d.size() < 2) return {};
  const std::string &leader = d.leader();
  const IdSet &leader_symptoms = sub.neighbors(leader);
  std::vector<ScoredSymptom> refuters;
  for (const std::string &s : eligible_symptoms(sub, evidence)) {
    // Opposite of the leader's expectation.
    bool present = leader_symptoms.count(s) == 0;
    double best = -1.0;
    std::string argmax;
    for (const DiseaseProbability &e : d.entries()) {
      double p = likelihood(sub, e.disease, s, cfg);
      double w = (present ? p : 1.0 - p) * e.probability;
      if (w > best || (w == best && e.disease < argmax)) {
        best = w;
        argmax = e.disease;
      }
    }
    if (best > 0.0 && argmax != leader) {
      refuters.push_back({s, information_gain(sub, d, s, cfg)});
    }
  }
  std::sort(refuters.begin(), refuters.end(), ranks_before);
  std::vector<std::string> out;
  for (const ScoredSymptom &r : refuters) out.push_back(r.symptom);
  return out;
}

TurnLog step(Consultation &session, PatientOracle &oracle) {
  if (!session.pending()) {
    throw SessionError("session has terminated", session.trace());
  }
  try {
    StructuredAnswer a = oracle.answer(session.kg().entity(session.pending()->symptom));
    return session.answer(a);
  } catch (const SessionError &) {
    throw;
  } catch (const std::exception &e) {
    throw SessionError(std::string("turn failed: ") + e.what(), session.trace());
  }
}

PatientProfile profile_from_case(const CaseFile &c) {
  return {c.demographics.age, c.demographics.gender, c.primary_symptom};
}

SessionOutcome run_session(const CaseFile &c, const Aligner &aligner,
                           const SessionConfig &cfg) {
  Consultation session(aligner, cfg, profile_from_case(c), {c.primary_symptom});
  CasePatientOracle oracle(c, aligner);
  while (session.pending()) step(session, oracle);
  return session.outcome();
}

SessionOutcome run_session(const CaseFile &c, const KnowledgeGraph &kg,
                           const EmbeddingProvider *provider,
                           const SessionConfig &cfg) {
  Aligner aligner(kg, provider, cfg.align);
  return run_session(c, aligner, cfg);
}

}  // namespace dxgraph
