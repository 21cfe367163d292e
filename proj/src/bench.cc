#include "dxgraph/bench.h"

#include <algorithm>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace dxgraph {

using nlohmann::ordered_json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t case_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
}

// Portable draws; std distributions differ between standard libraries.
double uniform01(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64 &rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

template <typename T>
void shuffle(std::vector<T> &v, std::mt19937_64 &rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

bool match_diagnosis(std::string_view predicted, std::string_view truth,
                     const Aligner &aligner) {
  AlignmentResult r = aligner.align(truth, EntityKind::kDisease);
  return r.matched.has_value() && *r.matched == predicted;
}

bool match_diagnosis(std::string_view predicted, std::string_view truth,
                     const KnowledgeGraph &kg, const EmbeddingProvider *provider,
                     const AlignConfig &cfg) {
  return match_diagnosis(predicted, truth, Aligner(kg, provider, cfg));
}

ordered_json config_to_json(const SessionConfig &cfg) {
  return ordered_json{
      {"t_max", cfg.t_max},
      {"stagnation_n", cfg.stagnation_n},
      {"n_candidates", cfg.inference.n_candidates},
      {"k_ratio", cfg.inference.k_ratio},
      {"epsilon", cfg.inference.epsilon},
      {"max_edit_distance", cfg.align.max_edit_distance},
      {"tau", cfg.align.tau},
      {"case_sensitive", cfg.align.case_sensitive},
      {"policy", to_string(cfg.policy)},
      {"seed", cfg.seed}};
}

BenchReport run_benchmark(const std::vector<CaseFile> &cases,
                          const Aligner &aligner, const SessionConfig &cfg) {
  cfg.validate();
  BenchReport report;
  report.policy = std::string(to_string(cfg.policy));
  report.seed = cfg.seed;
  report.config = config_to_json(cfg);
  if (cases.empty()) report.warnings.push_back("no cases; accuracy reported as 0");

  std::size_t correct = 0;
  long total_rounds = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CaseFile &c = cases[i];
    CaseResult r;
    r.case_id = c.id;
    r.truth = c.correct_diagnosis;
    SessionConfig case_cfg = cfg;
    case_cfg.seed = case_seed(cfg.seed, i);
    try {
      SessionOutcome outcome = run_session(c, aligner, case_cfg);
      r.predicted = outcome.final_diagnosis;
      r.predicted_name = aligner.kg().entity(outcome.final_diagnosis).name;
      r.correct = match_diagnosis(outcome.final_diagnosis, c.correct_diagnosis,
                                  aligner);
      r.rounds = outcome.rounds;
      r.reason = std::string(to_string(outcome.reason));
      r.degraded_start = outcome.degraded_start;
    } catch (const SessionError &e) {
      r.reason = "failed";
      r.error = e.what();
      r.rounds = static_cast<int>(e.partial_trace().size());
    } catch (const std::exception &e) {
      r.reason = "failed";
      r.error = e.what();
    }
    if (!r.error.empty()) {
      report.warnings.push_back("case " + c.id + " failed: " + r.error);
    }
    correct += r.correct ? 1 : 0;
    total_rounds += r.rounds;
    report.cases.push_back(std::move(r));
  }
  if (!cases.empty()) {
    report.accuracy = static_cast<double>(correct) / static_cast<double>(cases.size());
    report.mean_rounds =
        static_cast<double>(total_rounds) / static_cast<double>(cases.size());
  }
  return report;
}

BenchReport run_benchmark(const std::vector<CaseFile> &cases,
                          const KnowledgeGraph &kg,
                          const EmbeddingProvider *provider,
                          const SessionConfig &cfg) {
  Aligner aligner(kg, provider, cfg.align);
  return run_benchmark(cases, aligner, cfg);
}

ordered_json to_json(const BenchReport &report) {
  ordered_json cases = ordered_json::array();
  for (const CaseResult &r : report.cases) {
    ordered_json c{{"id", r.case_id},
                   {"predicted", r.predicted},
                   {"predicted_name", r.predicted_name},
                   {"truth", r.truth},
                   {"correct", r.correct},
                   {"rounds", r.rounds},
                   {"reason", r.reason},
                   {"degraded_start", r.degraded_start}};
    if (!r.error.empty()) c["error"] = r.error;
    cases.push_back(std::move(c));
  }
  return ordered_json{{"policy", report.policy},
                      {"seed", report.seed},
                      {"n", report.cases.size()},
                      {"accuracy", report.accuracy},
                      {"mean_rounds", report.mean_rounds},
                      {"rounds_definition", kRoundsDefinition},
                      {"config", report.config},
                      {"warnings", report.warnings},
                      {"cases", std::move(cases)}};
}

std::string format_table(const std::vector<BenchReport> &reports) {
  std::vector<std::vector<std::string>> rows{
      {"policy", "accuracy", "mean_rounds", "n", "seed"}};
  for (const BenchReport &r : reports) {
    rows.push_back({r.policy, fixed(r.accuracy, 4), fixed(r.mean_rounds, 2),
                    std::to_string(r.size()), std::to_string(r.seed)});
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto &row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  }
  std::ostringstream os;
  for (const auto &row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0) {
        os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[i])) << row[i];
      }
    }
    os << '\n';
  }
  return os.str();
}

std::vector<AggregateReport> aggregate(const std::vector<BenchReport> &reports) {
  std::vector<AggregateReport> out;
  for (const BenchReport &r : reports) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateReport &a) {
      return a.policy == r.policy;
    });
    if (it == out.end()) {
      out.push_back({r.policy, 0, 0.0, 0.0});
      it = out.end() - 1;
    }
    ++it->runs;
    it->accuracy += r.accuracy;
    it->mean_rounds += r.mean_rounds;
  }
  for (AggregateReport &a : out) {
    a.accuracy /= static_cast<double>(a.runs);
    a.mean_rounds /= static_cast<double>(a.runs);
  }
  return out;
}

ordered_json to_json(const std::vector<AggregateReport> &aggregates) {
  ordered_json out = ordered_json::array();
  for (const AggregateReport &a : aggregates) {
    out.push_back({{"policy", a.policy},
                   {"runs", a.runs},
                   {"accuracy", a.accuracy},
                   {"mean_rounds", a.mean_rounds}});
  }
  return out;
}

std::vector<CaseFile> generate_synthetic_corpus(const KnowledgeGraph &kg,
                                                std::size_t n_cases,
                                                CorpusNoise noise,
                                                std::uint64_t seed) {
  if (!(noise.dropout >= 0.0 && noise.dropout <= 0.5) ||
      !(noise.distractor >= 0.0 && noise.distractor <= 0.5)) {
    throw ArgumentError("dropout and distractor must lie in [0, 0.5]");
  }
  std::vector<std::string> diseases;
  for (const std::string &d : kg.disease_ids()) {
    if (!kg.symptoms_of(d).empty()) diseases.push_back(d);
  }
  if (diseases.empty()) {
    throw ArgumentError("knowledge graph has no disease with symptoms");
  }

  std::mt19937_64 rng(seed);
  std::vector<CaseFile> cases;
  cases.reserve(n_cases);
  for (std::size_t i = 0; i < n_cases; ++i) {
    const std::string &disease = diseases[uniform_index(rng, diseases.size())];
    const IdSet &linked = kg.symptoms_of(disease);
    std::vector<std::string> own(linked.begin(), linked.end());
    shuffle(own, rng);
    // Other diseases that have at least one symptom outside N(disease).
    std::vector<std::string> donors;
    for (const std::string &d : diseases) {
      if (d == disease) continue;
      for (const std::string &s : kg.symptoms_of(d)) {
        if (linked.count(s) == 0) {
          donors.push_back(d);
          break;
        }
      }
    }

    CaseFile c;
    c.id = "synthetic-" + std::to_string(seed) + "-" + std::to_string(i);
    c.demographics = {std::to_string(18 + uniform_index(rng, 63)),
                      uniform_index(rng, 2) == 0 ? "female" : "male"};
    c.primary_symptom = kg.entity(own.front()).name;
    std::set<std::string> used{own.front()};
    for (std::size_t k = 1; k < own.size(); ++k) {
      if (uniform01(rng) >= noise.dropout) {
        c.secondary_symptoms.push_back(kg.entity(own[k]).name);
        used.insert(own[k]);
      }
    }
    if (!donors.empty() && uniform01(rng) < noise.distractor) {
      const std::string &donor = donors[uniform_index(rng, donors.size())];
      std::vector<std::string> foreign;
      for (const std::string &s : kg.symptoms_of(donor)) {
        if (linked.count(s) == 0) foreign.push_back(s);
      }
      const std::string &s = foreign[uniform_index(rng, foreign.size())];
      if (used.insert(s).second) {
        c.secondary_symptoms.push_back(kg.entity(s).name);
      }
    }
    c.history = "Synthetic case generated from " + kg.entity(disease).name + ".";
    c.correct_diagnosis = kg.entity(disease).name;
    cases.push_back(std::move(c));
  }
  return cases;
}

KnowledgeGraph generate_synthetic_kg(const SyntheticGraphSpec &spec,
                                     std::uint64_t seed) {
  if (spec.diseases == 0 || spec.symptoms == 0) {
    throw ArgumentError("synthetic graph needs diseases and symptoms");
  }
  if (spec.min_symptoms_per_disease < 1 ||
      spec.min_symptoms_per_disease > spec.max_symptoms_per_disease ||
      spec.max_symptoms_per_disease > spec.symptoms) {
    throw ArgumentError("invalid symptoms-per-disease range");
  }
  auto id = [](char prefix, std::size_t i) {
    std::ostringstream os;
    os << prefix << std::setw(3) << std::setfill('0') << i;
    return os.str();
  };

  std::mt19937_64 rng(seed);
  std::vector<KgEntity> entities;
  std::vector<KgEdge> edges;
  for (std::size_t s = 1; s <= spec.symptoms; ++s) {
    entities.push_back({id('S', s), "symptom " + std::to_string(s),
                        EntityKind::kSymptom});
  }
  std::set<std::vector<std::size_t>> signatures;
  std::vector<std::size_t> pool(spec.symptoms);
  for (std::size_t s = 0; s < spec.symptoms; ++s) pool[s] = s + 1;
  const std::size_t span =
      spec.max_symptoms_per_disease - spec.min_symptoms_per_disease + 1;
  for (std::size_t d = 1; d <= spec.diseases; ++d) {
    std::vector<std::size_t> chosen;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) {
        throw ArgumentError("cannot draw distinct symptom signatures");
      }
      std::size_t k = spec.min_symptoms_per_disease + uniform_index(rng, span);
      shuffle(pool, rng);
      chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(chosen.begin(), chosen.end());
      if (signatures.insert(chosen).second) break;
    }
    std::string disease = id('D', d);
    entities.push_back({disease, "disease " + std::to_string(d),
                        EntityKind::kDisease});
    for (std::size_t s : chosen) {
      edges.push_back({disease, Relation::kDiseaseSymptom, id('S', s)});
    }
  }
  return KnowledgeGraph(std::move(entities), std::move(edges));
}

}  // namespace dxgraph
