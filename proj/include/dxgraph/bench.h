#ifndef DXGRAPH_BENCH_H_
#define DXGRAPH_BENCH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dxgraph/case_file.h"
#include "dxgraph/session.h"
#include "json.hpp"

namespace dxgraph {

// True when `truth` aligns (disease kind) to exactly `predicted`.
bool match_diagnosis(std::string_view predicted, std::string_view truth,
                     const Aligner &aligner);
bool match_diagnosis(std::string_view predicted, std::string_view truth,
                     const KnowledgeGraph &kg, const EmbeddingProvider *provider,
                     const AlignConfig &cfg = {});

struct CaseResult {
  std::string case_id;
  std::string predicted;  // KG id, empty on failure
  std::string predicted_name;
  std::string truth;
  bool correct = false;
  int rounds = 0;
  std::string reason;  // termination reason, or "failed"
  bool degraded_start = false;
  std::string error;
};

struct BenchReport {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<CaseResult> cases;
  double accuracy = 0.0;
  double mean_rounds = 0.0;
  std::vector<std::string> warnings;
  nlohmann::ordered_json config;

  std::size_t size() const { return cases.size(); }
};

inline constexpr std::string_view kRoundsDefinition =
    "questions asked per case; the final diagnosis turn is not counted";

// Runs one session per case under cfg.policy. Case i is seeded with
// mix(cfg.seed, i) so the Random policy is reproducible per case. Failed
// sessions count as incorrect.
BenchReport run_benchmark(const std::vector<CaseFile> &cases,
                          const Aligner &aligner, const SessionConfig &cfg);
BenchReport run_benchmark(const std::vector<CaseFile> &cases,
                          const KnowledgeGraph &kg,
                          const EmbeddingProvider *provider,
                          const SessionConfig &cfg);

nlohmann::ordered_json to_json(const BenchReport &report);
nlohmann::ordered_json config_to_json(const SessionConfig &cfg);

// Aligned plain-text table: policy, accuracy, mean_rounds, n, seed.
std::string format_table(const std::vector<BenchReport> &reports);

struct AggregateReport {
  std::string policy;
  std::size_t runs = 0;
  double accuracy = 0.0;
  double mean_rounds = 0.0;
};

// Averages accuracy and mean rounds over reports sharing a policy, in
// first-seen policy order.
std::vector<AggregateReport> aggregate(const std::vector<BenchReport> &reports);
nlohmann::ordered_json to_json(const std::vector<AggregateReport> &aggregates);

struct CorpusNoise {
  double dropout = 0.0;
  double distractor = 0.0;
};

// Each case draws a disease with at least one symptom, picks one of its
// symptoms as primary, and reveals each remaining symptom with probability
// 1 - dropout. With probability `distractor` the case also reports one
// symptom of another disease that is not linked to its own.
// Throws ArgumentError on noise outside [0, 0.5] or a graph without usable
// diseases.
std::vector<CaseFile> generate_synthetic_corpus(const KnowledgeGraph &kg,
                                                std::size_t n_cases,
                                                CorpusNoise noise,
                                                std::uint64_t seed);

struct SyntheticGraphSpec {
  std::size_t diseases = 30;
  std::size_t symptoms = 60;
  std::size_t min_symptoms_per_disease = 3;
  std::size_t max_symptoms_per_disease = 6;
};

// Random bipartite graph in which every disease has a distinct, non-empty
// symptom set. Ids are D001.., S001..; names "disease 1", "symptom 1", ...
KnowledgeGraph generate_synthetic_kg(const SyntheticGraphSpec &spec,
                                     std::uint64_t seed);

}  // namespace dxgraph

#endif  // DXGRAPH_BENCH_H_
