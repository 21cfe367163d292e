#ifndef DXGRAPH_INFERENCE_H_
#define DXGRAPH_INFERENCE_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dxgraph/entity_align.h"
#include "dxgraph/kg_store.h"

namespace dxgraph {

// All entropies and information gains are in bits.
struct InferenceConfig {
  int n_candidates = 5;
  // Plan size is round(k_ratio * |differential|), at least 1.
  double k_ratio = 1.0;
  // Likelihood substituted for structurally zero P(s|D). 0 gives exact Bayes.
  double epsilon = 1e-9;

  void validate() const;
};

struct DiseaseProbability {
  std::string disease;
  double probability = 0.0;

  friend bool operator==(const DiseaseProbability &,
                         const DiseaseProbability &) = default;
};

// Candidate diseases with a normalized distribution, sorted by descending
// probability (ties by ascending id).
class DifferentialSet {
 public:
  DifferentialSet() = default;

  // Normalizes `weights`. A zero (or non-finite) total yields the uniform
  // distribution with degenerate() set.
  static DifferentialSet from_weights(std::span<const std::string> diseases,
                                      std::span<const double> weights);

  const std::vector<DiseaseProbability> &entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::vector<std::string> ids() const;
  // Highest-probability disease; the lowest id among ties.
  const std::string &leader() const;
  // Throws LookupError for diseases outside the set.
  double probability(std::string_view disease) const;

  // Prior values recorded by init_prior, before any evidence.
  const std::map<std::string, double, std::less<>> &provenance() const {
    return provenance_;
  }
  void set_provenance(std::map<std::string, double, std::less<>> p) {
    provenance_ = std::move(p);
  }

  // Set when every posterior weight underflowed to zero.
  bool degenerate() const { return degenerate_; }

 private:
  std::vector<DiseaseProbability> entries_;
  std::map<std::string, double, std::less<>> provenance_;
  bool degenerate_ = false;
};

// Insertion-ordered symptom id sets. A symptom is never in both s_pos and
// s_neg; the latest assignment wins.
class EvidenceState {
 public:
  const std::vector<std::string> &s_pos() const { return s_pos_; }
  const std::vector<std::string> &s_neg() const { return s_neg_; }
  const std::vector<std::string> &asked() const { return asked_; }

  void add_positive(std::string_view symptom);
  void add_negative(std::string_view symptom);
  void mark_asked(std::string_view symptom);

  bool is_positive(std::string_view symptom) const;
  bool is_negative(std::string_view symptom) const;
  bool was_asked(std::string_view symptom) const;
  // asked, positive or negative
  bool is_known(std::string_view symptom) const;

  friend bool operator==(const EvidenceState &, const EvidenceState &) = default;

 private:
  std::vector<std::string> s_pos_;
  std::vector<std::string> s_neg_;
  std::vector<std::string> asked_;
};

struct ScoredSymptom {
  std::string symptom;
  double ig = 0.0;

  friend bool operator==(const ScoredSymptom &, const ScoredSymptom &) = default;
};

// Higher gain first; gains equal on a 1e-12 grid fall back to id order.
bool ranks_before(const ScoredSymptom &a, const ScoredSymptom &b);

struct InquiryPlan {
  // Descending IG, ties by ascending id.
  std::vector<ScoredSymptom> ranked;

  bool no_question() const { return ranked.empty(); }
  // Head of the ranking. Throws LookupError on an empty plan.
  const std::string &chosen() const;
};

// Ranks every disease of `kg` by |S_pos ∩ N(D)| plus the mean cosine
// between S_pos and D, and returns the top n_candidates. With empty S_pos
// the first n_candidates ids are returned.
std::vector<std::string> propose_candidates(const KnowledgeGraph &kg,
                                            const EvidenceState &evidence,
                                            const EmbeddingProvider *provider,
                                            const InferenceConfig &cfg);

// Prior proportional to the mean cosine similarity between the confirmed
// symptoms and each disease, floored at epsilon. Uniform when s_pos is empty
// or no provider is given.
DifferentialSet init_prior(const KnowledgeGraph &kg,
                           std::span<const std::string> differential,
                           std::span<const std::string> s_pos,
                           const EmbeddingProvider *provider,
                           const InferenceConfig &cfg);

// 1/|N(D)| for connected symptoms, epsilon otherwise.
double likelihood(const DiagnosticSubgraph &sub, std::string_view disease,
                  std::string_view symptom, const InferenceConfig &cfg);

// Bayes update of `prior` on every symptom in evidence.s_pos / s_neg,
// assuming conditional independence. Provenance is carried over.
DifferentialSet posterior(const DifferentialSet &prior,
                          const DiagnosticSubgraph &sub,
                          const EvidenceState &evidence,
                          const InferenceConfig &cfg);

// Shannon entropy in bits, with 0 log 0 = 0.
double entropy(std::span<const double> probabilities);
double entropy(const DifferentialSet &d);

// Expected entropy reduction from learning whether `symptom` is present.
// Throws ArgumentError when the symptom is outside the subgraph.
double information_gain(const DiagnosticSubgraph &sub, const DifferentialSet &d,
                        std::string_view symptom, const InferenceConfig &cfg);

// Subgraph symptoms not yet asked, confirmed or denied, in id order.
std::vector<std::string> eligible_symptoms(const DiagnosticSubgraph &sub,
                                           const EvidenceState &evidence);

// IG of every eligible symptom, sorted descending (ties by id).
std::vector<ScoredSymptom> score_inquiries(const DiagnosticSubgraph &sub,
                                           const DifferentialSet &d,
                                           const EvidenceState &evidence,
                                           const InferenceConfig &cfg);

// score_inquiries truncated to max(1, round(k_ratio * |d|)).
InquiryPlan rank_inquiries(const DiagnosticSubgraph &sub,
                           const DifferentialSet &d,
                           const EvidenceState &evidence,
                           const InferenceConfig &cfg);

// Candidates + prior + posterior from scratch for the current evidence.
struct Differential {
  DiagnosticSubgraph subgraph;
  DifferentialSet posterior;
};

Differential compute_differential(const KnowledgeGraph &kg,
                                  const EvidenceState &evidence,
                                  const EmbeddingProvider *provider,
                                  const InferenceConfig &cfg);

}  // namespace dxgraph

#endif  // DXGRAPH_INFERENCE_H_
