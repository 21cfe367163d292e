#ifndef DXGRAPH_ENTITY_ALIGN_H_
#define DXGRAPH_ENTITY_ALIGN_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dxgraph/kg_store.h"

namespace dxgraph {

struct AlignConfig {
  int max_edit_distance = 3;
  double tau = 0.85;
  bool case_sensitive = false;

  // Throws ArgumentError when max_edit_distance < 0 or tau outside (0, 1].
  void validate() const;
};

enum class AlignStage { kExact, kEditDistance, kEmbedding, kNone };

std::string_view to_string(AlignStage stage);

struct AlignmentResult {
  std::string query;
  std::optional<std::string> matched;
  AlignStage stage = AlignStage::kNone;
  // 0 for exact, edit distance for kEditDistance, cosine for kEmbedding.
  double score = 0.0;
};

// Maps an entity name to a fixed-length vector. Implementations must be
// deterministic and safe for concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // Throws AlignmentError when the name cannot be embedded.
  virtual std::vector<double> embed(std::string_view name) const = 0;
  // False when the provider simply has no entry for `name`. Callers treat
  // that as "no similarity"; embed() failures remain errors.
  virtual bool covers(std::string_view name) const {
    (void)name;
    return true;
  }
};

// Precomputed name -> vector table. Lookups are case-insensitive on the
// normalized name.
//
// File format: a `#dim=<d>` header line, then `name<TAB>v1,v2,...,vd` rows.
class TableEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit TableEmbeddingProvider(std::size_t dimension);

  static TableEmbeddingProvider load(std::istream &in);
  static TableEmbeddingProvider load(const std::filesystem::path &path);

  // Throws ArgumentError on a dimension mismatch.
  void add(std::string_view name, std::vector<double> vector);

  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view name) const override;
  bool covers(std::string_view name) const override;
  std::size_t size() const { return table_.size(); }

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Hashes character trigrams of the normalized name into a fixed number of
// buckets and L2-normalizes. Hermetic stand-in for a learned encoder.
class TrigramHashProvider : public EmbeddingProvider {
 public:
  explicit TrigramHashProvider(std::size_t dimension = 256);
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view name) const override;

 private:
  std::size_t dimension_;
};

// Cosine similarity; 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

// Trim, collapse whitespace, and lowercase (ASCII) unless case_sensitive.
std::string normalize_term(std::string_view raw, bool case_sensitive = false);

// Byte-level Levenshtein distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Exact -> edit distance -> embedding cascade over the entities of one kind.
// Holds a reference to `kg` and `provider`; both must outlive the aligner.
class Aligner {
 public:
  Aligner(const KnowledgeGraph &kg, const EmbeddingProvider *provider,
          AlignConfig cfg = {});

  AlignmentResult align(std::string_view query, EntityKind kind) const;

  const KnowledgeGraph &kg() const { return *kg_; }
  const EmbeddingProvider *provider() const { return provider_; }
  const AlignConfig &config() const { return cfg_; }

 private:
  struct Candidate {
    std::string id;
    std::string key;  // normalized name
  };
  struct EmbeddingCache {
    std::once_flag once;
    std::vector<std::vector<double>> vectors;
  };

  const std::vector<Candidate> &candidates(EntityKind kind) const;
  const std::vector<std::vector<double>> &embeddings(EntityKind kind) const;

  const KnowledgeGraph *kg_;
  const EmbeddingProvider *provider_;
  AlignConfig cfg_;
  std::vector<Candidate> diseases_;
  std::vector<Candidate> symptoms_;
  std::unique_ptr<EmbeddingCache> disease_vectors_;
  std::unique_ptr<EmbeddingCache> symptom_vectors_;
};

AlignmentResult align(std::string_view query, const KnowledgeGraph &kg,
                      EntityKind kind, const EmbeddingProvider *provider,
                      const AlignConfig &cfg = {});

// Structured oracle answer: the terms the patient affirmed and denied.
// Both lists empty means the answer carried no information.
struct StructuredAnswer {
  std::vector<std::string> asserted;
  std::vector<std::string> denied;

  bool empty() const { return asserted.empty() && denied.empty(); }
  friend bool operator==(const StructuredAnswer &,
                         const StructuredAnswer &) = default;
};

struct Mentions {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
};

// Throws ArgumentError when one term is both asserted and denied.
Mentions extract_mentions(const StructuredAnswer &answer);

}  // namespace dxgraph

#endif  // DXGRAPH_ENTITY_ALIGN_H_
