#ifndef DXGRAPH_KG_STORE_H_
#define DXGRAPH_KG_STORE_H_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dxgraph {

enum class EntityKind { kDisease, kSymptom };
enum class Relation { kDiseaseSymptom, kDiseaseDisease };

std::string_view to_string(EntityKind kind);
std::string_view to_string(Relation relation);

using IdSet = std::set<std::string, std::less<>>;

struct KgEntity {
  std::string id;
  std::string name;
  EntityKind kind = EntityKind::kDisease;

  friend bool operator==(const KgEntity &, const KgEntity &) = default;
};

struct KgEdge {
  std::string src;
  Relation relation = Relation::kDiseaseSymptom;
  std::string dst;

  friend auto operator<=>(const KgEdge &, const KgEdge &) = default;
};

// Immutable disease-symptom graph. Construction validates every invariant;
// afterwards the graph is read-only and safe to share across threads.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Throws ValidationError on duplicate ids, empty names, dangling or
  // mistyped edge endpoints, duplicate edges and self-loops.
  KnowledgeGraph(std::vector<KgEntity> entities, std::vector<KgEdge> edges);

  // Entities sorted by id.
  const std::vector<KgEntity> &entities() const { return entities_; }
  // Edges sorted by (src, relation, dst).
  const std::vector<KgEdge> &edges() const { return edges_; }

  const std::vector<std::string> &disease_ids() const { return disease_ids_; }
  const std::vector<std::string> &symptom_ids() const { return symptom_ids_; }

  bool empty() const { return entities_.empty(); }

  // nullptr when absent.
  const KgEntity *find(std::string_view id) const;
  // Throws LookupError when absent.
  const KgEntity &entity(std::string_view id) const;

  // Symptoms of a disease. Throws LookupError for unknown or non-disease ids.
  const IdSet &symptoms_of(std::string_view disease) const;

  // Number of diseases linked to a symptom.
  std::size_t symptom_degree(std::string_view symptom) const;

 private:
  std::vector<KgEntity> entities_;
  std::vector<KgEdge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> disease_ids_;
  std::vector<std::string> symptom_ids_;
  std::unordered_map<std::string, IdSet> symptoms_of_;
  std::unordered_map<std::string, std::size_t> degree_;
};

// Trims and collapses runs of whitespace to a single space. Case preserved.
std::string normalize_whitespace(std::string_view raw);

// Reads the node table (`id<TAB>kind<TAB>name`) and edge table
// (`src<TAB>relation<TAB>dst`). Lines starting with '#' and blank lines are
// skipped. Throws ParseError (with line number) or ValidationError.
KnowledgeGraph load_kg(std::istream &nodes, std::istream &edges);
KnowledgeGraph load_kg(const std::filesystem::path &nodes,
                       const std::filesystem::path &edges);

void save_kg(const KnowledgeGraph &kg, std::ostream &nodes,
             std::ostream &edges);
void save_kg(const KnowledgeGraph &kg, const std::filesystem::path &nodes,
             const std::filesystem::path &edges);

const IdSet &neighbors(const KnowledgeGraph &kg, std::string_view disease);

// The differential together with every symptom adjacent to it.
class DiagnosticSubgraph {
 public:
  DiagnosticSubgraph() = default;

  // Builds directly from adjacency lists. Throws ArgumentError on duplicate
  // diseases or an empty differential.
  static DiagnosticSubgraph from_adjacency(
      std::vector<std::string> diseases,
      const std::map<std::string, IdSet, std::less<>> &adjacency);

  const std::vector<std::string> &diseases() const { return diseases_; }
  const IdSet &symptoms() const { return symptoms_; }
  const std::map<std::string, IdSet, std::less<>> &adjacency() const {
    return adjacency_;
  }

  bool has_disease(std::string_view disease) const;
  bool has_symptom(std::string_view symptom) const;
  // Throws LookupError for diseases outside the subgraph.
  const IdSet &neighbors(std::string_view disease) const;

 private:
  std::vector<std::string> diseases_;
  IdSet symptoms_;
  std::map<std::string, IdSet, std::less<>> adjacency_;
};

// Throws ArgumentError on an empty differential, duplicates, or ids that are
// not diseases of `kg`.
DiagnosticSubgraph build_subgraph(const KnowledgeGraph &kg,
                                  std::span<const std::string> differential);

}  // namespace dxgraph

#endif  // DXGRAPH_KG_STORE_H_
