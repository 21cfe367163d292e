#include "dxgraph/inference.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dxgraph/error.h"

namespace dxgraph {

namespace {

// Sums in ascending order so that permuted inputs give bit-identical totals;
// symmetric symptoms then tie exactly instead of by rounding accident.
double ordered_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

bool contains(const std::vector<std::string> &ids, std::string_view id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

void erase(std::vector<std::string> &ids, std::string_view id) {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it != ids.end()) ids.erase(it);
}

// Single-answer Bayes branch: returns the unnormalized weights.
std::vector<double> branch_weights(const DiagnosticSubgraph &sub,
                                   const DifferentialSet &d,
                                   std::string_view symptom, bool present,
                                   const InferenceConfig &cfg) {
  std::vector<double> w;
  w.reserve(d.size());
  for (const DiseaseProbability &e : d.entries()) {
    double p = likelihood(sub, e.disease, symptom, cfg);
    w.push_back((present ? p : 1.0 - p) * e.probability);
  }
  return w;
}

double branch_entropy(std::vector<double> weights, double total) {
  if (total <= 0.0) return 0.0;
  for (double &w : weights) w /= total;
  return entropy(weights);
}

// Names the provider has no entry for get a zero vector: no similarity.
std::vector<double> vector_for(const EmbeddingProvider &provider,
                               std::string_view name) {
  if (!provider.covers(name)) return std::vector<double>(provider.dimension(), 0.0);
  return provider.embed(name);
}

}  // namespace

void InferenceConfig::validate() const {
  if (n_candidates < 1) throw ArgumentError("n_candidates must be >= 1");
  if (!(k_ratio > 0.0)) throw ArgumentError("k_ratio must be > 0");
  if (!(epsilon >= 0.0 && epsilon < 1e-3)) {
    throw ArgumentError("epsilon must be in [0, 1e-3)");
  }
}

// -- DifferentialSet ---------------------------------------------------------

DifferentialSet DifferentialSet::from_weights(
    std::span<const std::string> diseases, std::span<const double> weights) {
  if (diseases.size() != weights.size()) {
    throw ArgumentError("disease and weight counts differ");
  }
  DifferentialSet d;
  double total = ordered_sum(std::vector<double>(weights.begin(), weights.end()));
  bool usable = total > 0.0 && std::isfinite(total);
  d.degenerate_ = !usable && !diseases.empty();
  for (std::size_t i = 0; i < diseases.size(); ++i) {
    double p = usable ? std::max(weights[i], 0.0) / total
                      : 1.0 / static_cast<double>(diseases.size());
    d.entries_.push_back({diseases[i], p});
  }
  std::sort(d.entries_.begin(), d.entries_.end(),
            [](const DiseaseProbability &a, const DiseaseProbability &b) {
              if (a.probability != b.probability) {
                return a.probability > b.probability;
              }
              return a.disease < b.disease;
            });
  return d;
}

std::vector<std::string> DifferentialSet::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const DiseaseProbability &e : entries_) out.push_back(e.disease);
  return out;
}

const std::string &DifferentialSet::leader() const {
  if (entries_.empty()) throw LookupError("empty differential");
  return entries_.front().disease;
}

double DifferentialSet::probability(std::string_view disease) const {
  for (const DiseaseProbability &e : entries_) {
    if (e.disease == disease) return e.probability;
  }
  throw LookupError("disease '" + std::string(disease) +
                    "' is not in the differential");
}

// -- EvidenceState -----------------------------------------------------------

void EvidenceState::add_positive(std::string_view symptom) {
  erase(s_neg_, symptom);
  if (!contains(s_pos_, symptom)) s_pos_.emplace_back(symptom);
}

void EvidenceState::add_negative(std::string_view symptom) {
  erase(s_pos_, symptom);
  if (!contains(s_neg_, symptom)) s_neg_.emplace_back(symptom);
}

void EvidenceState::mark_asked(std::string_view symptom) {
  if (!contains(asked_, symptom)) asked_.emplace_back(symptom);
}

bool EvidenceState::is_positive(std::string_view symptom) const {
  return contains(s_pos_, symptom);
}

bool EvidenceState::is_negative(std::string_view symptom) const {
  return contains(s_neg_, symptom);
}

bool EvidenceState::was_asked(std::string_view symptom) const {
  return contains(asked_, symptom);
}

bool EvidenceState::is_known(std::string_view symptom) const {
  return was_asked(symptom) || is_positive(symptom) || is_negative(symptom);
}

const std::string &InquiryPlan::chosen() const {
  if (ranked.empty()) throw LookupError("inquiry plan is empty");
  return ranked.front().symptom;
}

// -- Operations --------------------------------------------------------------

std::vector<std::string> propose_candidates(const KnowledgeGraph &kg,
                                            const EvidenceState &evidence,
                                            const EmbeddingProvider *provider,
                                            const InferenceConfig &cfg) {
  cfg.validate();
  const std::vector<std::string> &diseases = kg.disease_ids();
  if (diseases.empty()) throw ArgumentError("knowledge graph has no diseases");
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.n_candidates),
                                       diseases.size());
  if (evidence.s_pos().empty()) {
    return {diseases.begin(), diseases.begin() + static_cast<std::ptrdiff_t>(n)};
  }

  std::vector<std::vector<double>> symptom_vectors;
  if (provider != nullptr) {
    for (const std::string &s : evidence.s_pos()) {
      symptom_vectors.push_back(vector_for(*provider, kg.entity(s).name));
    }
  }

  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(diseases.size());
  for (const std::string &d : diseases) {
    const IdSet &n_d = kg.symptoms_of(d);
    double score = 0.0;
    for (const std::string &s : evidence.s_pos()) {
      if (n_d.count(s) != 0) score += 1.0;
    }
    if (provider != nullptr) {
      std::vector<double> dv = vector_for(*provider, kg.entity(d).name);
      double sim = 0.0;
      for (const std::vector<double> &sv : symptom_vectors) sim += cosine(sv, dv);
      score += sim / static_cast<double>(symptom_vectors.size());
    }
    scored.emplace_back(score, d);
  }
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                    scored.end(), [](const auto &a, const auto &b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].second);
  return out;
}

DifferentialSet init_prior(const KnowledgeGraph &kg,
                           std::span<const std::string> differential,
                           std::span<const std::string> s_pos,
                           const EmbeddingProvider *provider,
                           const InferenceConfig &cfg) {
  if (differential.empty()) throw ArgumentError("empty differential");
  std::vector<double> raw(differential.size(), 1.0);
  if (provider != nullptr && !s_pos.empty()) {
    std::vector<std::vector<double>> symptom_vectors;
    for (const std::string &s : s_pos) {
      symptom_vectors.push_back(vector_for(*provider, kg.entity(s).name));
    }
    for (std::size_t i = 0; i < differential.size(); ++i) {
      std::vector<double> dv = vector_for(*provider, kg.entity(differential[i]).name);
      double sum = 0.0;
      for (const std::vector<double> &sv : symptom_vectors) sum += cosine(sv, dv);
      raw[i] = std::max(sum / static_cast<double>(symptom_vectors.size()),
                        cfg.epsilon);
    }
  }
  DifferentialSet prior = DifferentialSet::from_weights(differential, raw);
  std::map<std::string, double, std::less<>> provenance;
  for (const DiseaseProbability &e : prior.entries()) {
    provenance[e.disease] = e.probability;
  }
  prior.set_provenance(std::move(provenance));
  return prior;
}

double likelihood(const DiagnosticSubgraph &sub, std::string_view disease,
                  std::string_view symptom, const InferenceConfig &cfg) {
  const IdSet &n = sub.neighbors(disease);
  if (n.empty() || n.find(symptom) == n.end()) return cfg.epsilon;
  return 1.0 / static_cast<double>(n.size());
}

DifferentialSet posterior(const DifferentialSet &prior,
                          const DiagnosticSubgraph &sub,
                          const EvidenceState &evidence,
                          const InferenceConfig &cfg) {
  if (evidence.s_pos().empty() && evidence.s_neg().empty()) return prior;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<std::string> ids;
  std::vector<double> log_w;
  for (const DiseaseProbability &e : prior.entries()) {
    std::vector<double> terms{e.probability > 0.0 ? std::log(e.probability) : neg_inf};
    for (const std::string &s : evidence.s_pos()) {
      double p = likelihood(sub, e.disease, s, cfg);
      terms.push_back(p > 0.0 ? std::log(p) : neg_inf);
    }
    for (const std::string &s : evidence.s_neg()) {
      double q = 1.0 - likelihood(sub, e.disease, s, cfg);
      terms.push_back(q > 0.0 ? std::log(q) : neg_inf);
    }
    ids.push_back(e.disease);
    // sorted, so diseases with the same factors in another order tie exactly
    log_w.push_back(ordered_sum(std::move(terms)));
  }
  // Shift by the maximum so the exponentials cannot all underflow.
  double top = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> w(log_w.size(), 0.0);
  if (top != neg_inf) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w[i] - top);
  }
  DifferentialSet out = DifferentialSet::from_weights(ids, w);
  out.set_provenance(prior.provenance());
  return out;
}

double entropy(std::span<const double> probabilities) {
  std::vector<double> terms;
  terms.reserve(probabilities.size());
  for (double p : probabilities) {
    if (p > 0.0) terms.push_back(-p * std::log2(p));
  }
  return ordered_sum(std::move(terms));
}

double entropy(const DifferentialSet &d) {
  std::vector<double> p;
  p.reserve(d.size());
  for (const DiseaseProbability &e : d.entries()) p.push_back(e.probability);
  return entropy(p);
}

double information_gain(const DiagnosticSubgraph &sub, const DifferentialSet &d,
                        std::string_view symptom, const InferenceConfig &cfg) {
  if (!sub.has_symptom(symptom)) {
    throw ArgumentError("symptom '" + std::string(symptom) +
                        "' is not in the subgraph");
  }
  std::vector<double> pos = branch_weights(sub, d, symptom, true, cfg);
  std::vector<double> neg = branch_weights(sub, d, symptom, false, cfg);
  double p_pos = ordered_sum(pos);
  double p_neg = ordered_sum(neg);
  double total = p_pos + p_neg;
  if (total <= 0.0) return 0.0;
  // Renormalize so a prior that sums to 1 only within rounding does not leak
  // into the gain of an uninformative symptom. Written symmetrically so
  // mirrored symptoms score bit-identically.
  double conditional = (p_pos * branch_entropy(pos, p_pos) +
                        p_neg * branch_entropy(neg, p_neg)) /
                       total;
  return entropy(d) - conditional;
}

std::vector<std::string> eligible_symptoms(const DiagnosticSubgraph &sub,
                                           const EvidenceState &evidence) {
  std::vector<std::string> out;
  for (const std::string &s : sub.symptoms()) {
    if (!evidence.is_known(s)) out.push_back(s);
  }
  return out;
}

bool ranks_before(const ScoredSymptom &a, const ScoredSymptom &b) {
  // below 1e-12 the difference is rounding noise
  double ka = std::nearbyint(a.ig * 1e12), kb = std::nearbyint(b.ig * 1e12);
  if (ka != kb) return ka > kb;
  return a.symptom < b.symptom;
}

std::vector<ScoredSymptom> score_inquiries(const DiagnosticSubgraph &sub,
                                           const DifferentialSet &d,
                                           const EvidenceState &evidence,
                                           const InferenceConfig &cfg) {
  std::vector<ScoredSymptom> scored;
  for (const std::string &s : eligible_symptoms(sub, evidence)) {
    scored.push_back({s, information_gain(sub, d, s, cfg)});
  }
  std::sort(scored.begin(), scored.end(), ranks_before);
  return scored;
}

InquiryPlan rank_inquiries(const DiagnosticSubgraph &sub,
                           const DifferentialSet &d,
                           const EvidenceState &evidence,
                           const InferenceConfig &cfg) {
  InquiryPlan plan;
  plan.ranked = score_inquiries(sub, d, evidence, cfg);
  auto k = static_cast<std::size_t>(
      std::max(1.0, std::round(cfg.k_ratio * static_cast<double>(d.size()))));
  if (plan.ranked.size() > k) plan.ranked.resize(k);
  return plan;
}

Differential compute_differential(const KnowledgeGraph &kg,
                                  const EvidenceState &evidence,
                                  const EmbeddingProvider *provider,
                                  const InferenceConfig &cfg) {
  std::vector<std::string> candidates =
      propose_candidates(kg, evidence, provider, cfg);
  DiagnosticSubgraph sub = build_subgraph(kg, candidates);
  DifferentialSet prior =
      init_prior(kg, candidates, evidence.s_pos(), provider, cfg);
  DifferentialSet post = posterior(prior, sub, evidence, cfg);
  return {std::move(sub), std::move(post)};
}

}  // namespace dxgraph
