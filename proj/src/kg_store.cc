#include "dxgraph/kg_store.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "dxgraph/error.h"

namespace dxgraph {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

// Returns false for blank and comment lines.
bool next_row(std::istream &in, std::string &line, int &line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view = line;
    std::size_t first = 0;
    while (first < view.size() && is_space(view[first])) ++first;
    if (first == view.size() || view[first] == '#') continue;
    return true;
  }
  return false;
}

std::string trimmed(std::string_view s) { return normalize_whitespace(s); }

}  // namespace

std::string_view to_string(EntityKind kind) {
  return kind == EntityKind::kDisease ? "disease" : "symptom";
}

std::string_view to_string(Relation relation) {
  return relation == Relation::kDiseaseSymptom ? "disease_symptom"
                                               : "disease_disease";
}

std::string normalize_whitespace(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

KnowledgeGraph::KnowledgeGraph(std::vector<KgEntity> entities,
                               std::vector<KgEdge> edges)
    : entities_(std::move(entities)), edges_(std::move(edges)) {
  std::sort(entities_.begin(), entities_.end(),
            [](const KgEntity &a, const KgEntity &b) { return a.id < b.id; });
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    KgEntity &e = entities_[i];
    e.name = normalize_whitespace(e.name);
    if (e.id.empty()) throw ValidationError("entity with empty id");
    if (e.name.empty()) {
      throw ValidationError("entity '" + e.id + "' has an empty name");
    }
    if (!index_.emplace(e.id, i).second) {
      throw ValidationError("duplicate entity id '" + e.id + "'");
    }
    if (e.kind == EntityKind::kDisease) {
      disease_ids_.push_back(e.id);
      symptoms_of_[e.id];
    } else {
      symptom_ids_.push_back(e.id);
      degree_[e.id] = 0;
    }
  }

  std::sort(edges_.begin(), edges_.end());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const KgEdge &edge = edges_[i];
    if (i > 0 && edges_[i - 1] == edge) {
      throw ValidationError("duplicate edge " + edge.src + " " +
                            std::string(to_string(edge.relation)) + " " +
                            edge.dst);
    }
    if (edge.src == edge.dst) {
      throw ValidationError("self-loop on '" + edge.src + "'");
    }
    const KgEntity *src = find(edge.src);
    if (src == nullptr) {
      throw ValidationError("edge references unknown id '" + edge.src + "'");
    }
    const KgEntity *dst = find(edge.dst);
    if (dst == nullptr) {
      throw ValidationError("edge references unknown id '" + edge.dst + "'");
    }
    if (src->kind != EntityKind::kDisease) {
      throw ValidationError("edge source '" + edge.src + "' is not a disease");
    }
    EntityKind expected = edge.relation == Relation::kDiseaseSymptom
                              ? EntityKind::kSymptom
                              : EntityKind::kDisease;
    if (dst->kind != expected) {
      throw ValidationError("edge target '" + edge.dst + "' is not a " +
                            std::string(to_string(expected)));
    }
    if (edge.relation == Relation::kDiseaseSymptom) {
      symptoms_of_[edge.src].insert(edge.dst);
      ++degree_[edge.dst];
    }
  }
}

const KgEntity *KnowledgeGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entities_[it->second];
}

const KgEntity &KnowledgeGraph::entity(std::string_view id) const {
  const KgEntity *e = find(id);
  if (e == nullptr) throw LookupError("unknown entity '" + std::string(id) + "'");
  return *e;
}

const IdSet &KnowledgeGraph::symptoms_of(std::string_view disease) const {
  auto it = symptoms_of_.find(std::string(disease));
  if (it == symptoms_of_.end()) {
    throw LookupError("unknown disease '" + std::string(disease) + "'");
  }
  return it->second;
}

std::size_t KnowledgeGraph::symptom_degree(std::string_view symptom) const {
  auto it = degree_.find(std::string(symptom));
  if (it == degree_.end()) {
    throw LookupError("unknown symptom '" + std::string(symptom) + "'");
  }
  return it->second;
}

KnowledgeGraph load_kg(std::istream &nodes, std::istream &edges) {
  std::vector<KgEntity> entities;
  std::string line;
  int line_no = 0;
  while (next_row(nodes, line, line_no)) {
    std::vector<std::string> f = split_tabs(line);
    if (f.size() != 3) {
      throw ParseError("nodes", line_no,
                       "expected 3 tab-separated fields, got " +
                           std::to_string(f.size()));
    }
    KgEntity e;
    e.id = trimmed(f[0]);
    std::string kind = trimmed(f[1]);
    if (kind == "disease") {
      e.kind = EntityKind::kDisease;
    } else if (kind == "symptom") {
      e.kind = EntityKind::kSymptom;
    } else {
      throw ParseError("nodes", line_no, "unknown kind '" + kind + "'");
    }
    e.name = normalize_whitespace(f[2]);
    if (e.id.empty()) throw ParseError("nodes", line_no, "empty id");
    if (e.name.empty()) throw ParseError("nodes", line_no, "empty name");
    entities.push_back(std::move(e));
  }

  std::vector<KgEdge> edge_list;
  line_no = 0;
  while (next_row(edges, line, line_no)) {
    std::vector<std::string> f = split_tabs(line);
    if (f.size() != 3) {
      throw ParseError("edges", line_no,
                       "expected 3 tab-separated fields, got " +
                           std::to_string(f.size()));
    }
    KgEdge edge;
    edge.src = trimmed(f[0]);
    edge.dst = trimmed(f[2]);
    std::string rel = trimmed(f[1]);
    if (rel == "disease_symptom") {
      edge.relation = Relation::kDiseaseSymptom;
    } else if (rel == "disease_disease") {
      edge.relation = Relation::kDiseaseDisease;
    } else {
      throw ParseError("edges", line_no, "unknown relation '" + rel + "'");
    }
    edge_list.push_back(std::move(edge));
  }
  return KnowledgeGraph(std::move(entities), std::move(edge_list));
}

KnowledgeGraph load_kg(const std::filesystem::path &nodes,
                       const std::filesystem::path &edges) {
  std::ifstream n(nodes);
  if (!n) throw LookupError("cannot open node file " + nodes.string());
  std::ifstream e(edges);
  if (!e) throw LookupError("cannot open edge file " + edges.string());
  return load_kg(n, e);
}

void save_kg(const KnowledgeGraph &kg, std::ostream &nodes,
             std::ostream &edges) {
  nodes << "# id\tkind\tname\n";
  for (const KgEntity &e : kg.entities()) {
    nodes << e.id << '\t' << to_string(e.kind) << '\t' << e.name << '\n';
  }
  edges << "# src_id\trelation\tdst_id\n";
  for (const KgEdge &edge : kg.edges()) {
    edges << edge.src << '\t' << to_string(edge.relation) << '\t' << edge.dst
          << '\n';
  }
}

void save_kg(const KnowledgeGraph &kg, const std::filesystem::path &nodes,
             const std::filesystem::path &edges) {
  std::ofstream n(nodes);
  std::ofstream e(edges);
  if (!n || !e) throw LookupError("cannot write graph files");
  save_kg(kg, n, e);
}

const IdSet &neighbors(const KnowledgeGraph &kg, std::string_view disease) {
  return kg.symptoms_of(disease);
}

DiagnosticSubgraph DiagnosticSubgraph::from_adjacency(
    std::vector<std::string> diseases,
    const std::map<std::string, IdSet, std::less<>> &adjacency) {
  if (diseases.empty()) throw ArgumentError("empty differential");
  DiagnosticSubgraph sub;
  for (const std::string &d : diseases) {
    if (sub.adjacency_.count(d) != 0) {
      throw ArgumentError("duplicate disease '" + d + "' in differential");
    }
    auto it = adjacency.find(d);
    IdSet &symptoms = sub.adjacency_[d];
    if (it != adjacency.end()) symptoms = it->second;
    sub.symptoms_.insert(symptoms.begin(), symptoms.end());
  }
  sub.diseases_ = std::move(diseases);
  return sub;
}

bool DiagnosticSubgraph::has_disease(std::string_view disease) const {
  return adjacency_.find(disease) != adjacency_.end();
}

bool DiagnosticSubgraph::has_symptom(std::string_view symptom) const {
  return symptoms_.find(symptom) != symptoms_.end();
}

const IdSet &DiagnosticSubgraph::neighbors(std::string_view disease) const {
  auto it = adjacency_.find(disease);
  if (it == adjacency_.end()) {
    throw LookupError("disease '" + std::string(disease) +
                      "' is not in the subgraph");
  }
  return it->second;
}

DiagnosticSubgraph build_subgraph(const KnowledgeGraph &kg,
                                  std::span<const std::string> differential) {
  std::map<std::string, IdSet, std::less<>> adjacency;
  for (const std::string &d : differential) {
    const KgEntity *e = kg.find(d);
    if (e == nullptr || e->kind != EntityKind::kDisease) {
      throw ArgumentError("'" + d + "' is not a disease");
    }
    adjacency[d] = kg.symptoms_of(d);
  }
  return DiagnosticSubgraph::from_adjacency(
      std::vector<std::string>(differential.begin(), differential.end()),
      adjacency);
}

}  // namespace dxgraph
