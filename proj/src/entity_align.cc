#include "dxgraph/entity_align.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <sstream>

#include "dxgraph/error.h"

namespace dxgraph {

void AlignConfig::validate() const {
  if (max_edit_distance < 0) {
    throw ArgumentError("max_edit_distance must be >= 0");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw ArgumentError("tau must be in (0, 1]");
}

std::string_view to_string(AlignStage stage) {
  switch (stage) {
    case AlignStage::kExact: return "exact";
    case AlignStage::kEditDistance: return "edit_distance";
    case AlignStage::kEmbedding: return "embedding";
    case AlignStage::kNone: return "none";
  }
  return "none";
}

std::string normalize_term(std::string_view raw, bool case_sensitive) {
  std::string out = normalize_whitespace(raw);
  if (!case_sensitive) {
    for (char &c : out) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Single row over the shorter string.
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw AlignmentError("cosine of vectors with different lengths");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// -- TableEmbeddingProvider --------------------------------------------------

TableEmbeddingProvider::TableEmbeddingProvider(std::size_t dimension)
    : dimension_(dimension) {
  if (dimension == 0) throw ArgumentError("embedding dimension must be > 0");
}

void TableEmbeddingProvider::add(std::string_view name,
                                 std::vector<double> vector) {
  if (vector.size() != dimension_) {
    throw ArgumentError("vector for '" + std::string(name) + "' has " +
                        std::to_string(vector.size()) + " components, expected " +
                        std::to_string(dimension_));
  }
  table_[normalize_term(name)] = std::move(vector);
}

bool TableEmbeddingProvider::covers(std::string_view name) const {
  return table_.count(normalize_term(name)) != 0;
}

std::vector<double> TableEmbeddingProvider::embed(std::string_view name) const {
  auto it = table_.find(normalize_term(name));
  if (it == table_.end()) {
    throw AlignmentError("no embedding for '" + std::string(name) + "'");
  }
  return it->second;
}

TableEmbeddingProvider TableEmbeddingProvider::load(std::istream &in) {
  std::string line;
  int line_no = 0;
  std::optional<TableEmbeddingProvider> provider;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#dim=", 0) == 0) {
      if (provider) throw ParseError("vectors", line_no, "repeated #dim header");
      std::size_t dim = 0;
      try {
        dim = std::stoul(line.substr(5));
      } catch (const std::exception &) {
        throw ParseError("vectors", line_no, "bad #dim header");
      }
      if (dim == 0) throw ParseError("vectors", line_no, "dimension must be > 0");
      provider.emplace(dim);
      continue;
    }
    if (line[0] == '#') continue;
    if (!provider) throw ParseError("vectors", line_no, "missing #dim header");
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("vectors", line_no, "expected name<TAB>values");
    }
    std::vector<double> values;
    std::stringstream ss(line.substr(tab + 1));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (normalize_whitespace(cell.substr(used)).size() != 0) throw 0;
      } catch (...) {
        throw ParseError("vectors", line_no, "bad component '" + cell + "'");
      }
    }
    if (values.size() != provider->dimension()) {
      throw ParseError("vectors", line_no,
                       "expected " + std::to_string(provider->dimension()) +
                           " components, got " + std::to_string(values.size()));
    }
    provider->add(line.substr(0, tab), std::move(values));
  }
  if (!provider) throw ParseError("vectors", line_no, "missing #dim header");
  return std::move(*provider);
}

TableEmbeddingProvider TableEmbeddingProvider::load(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open vector file " + path.string());
  return load(in);
}

// -- TrigramHashProvider -----------------------------------------------------

TrigramHashProvider::TrigramHashProvider(std::size_t dimension)
    : dimension_(dimension) {
  if (dimension == 0) throw ArgumentError("embedding dimension must be > 0");
}

std::vector<double> TrigramHashProvider::embed(std::string_view name) const {
  std::vector<double> v(dimension_, 0.0);
  std::string padded = "  " + normalize_term(name) + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    // FNV-1a keeps bucket assignment stable across platforms.
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t k = i; k < i + 3; ++k) {
      h ^= static_cast<unsigned char>(padded[k]);
      h *= 1099511628211ULL;
    }
    v[h % dimension_] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double &x : v) x /= norm;
  }
  return v;
}

// -- Aligner -----------------------------------------------------------------

Aligner::Aligner(const KnowledgeGraph &kg, const EmbeddingProvider *provider,
                 AlignConfig cfg)
    : kg_(&kg),
      provider_(provider),
      cfg_(cfg),
      disease_vectors_(std::make_unique<EmbeddingCache>()),
      symptom_vectors_(std::make_unique<EmbeddingCache>()) {
  cfg_.validate();
  for (const KgEntity &e : kg.entities()) {
    Candidate c{e.id, normalize_term(e.name, cfg_.case_sensitive)};
    (e.kind == EntityKind::kDisease ? diseases_ : symptoms_).push_back(std::move(c));
  }
}

const std::vector<Aligner::Candidate> &Aligner::candidates(
    EntityKind kind) const {
  return kind == EntityKind::kDisease ? diseases_ : symptoms_;
}

const std::vector<std::vector<double>> &Aligner::embeddings(
    EntityKind kind) const {
  EmbeddingCache &cache =
      kind == EntityKind::kDisease ? *disease_vectors_ : *symptom_vectors_;
  std::call_once(cache.once, [&] {
    std::vector<std::vector<double>> vectors;
    for (const Candidate &c : candidates(kind)) {
      const std::string &name = kg_->entity(c.id).name;
      if (!provider_->covers(name)) {
        vectors.emplace_back(provider_->dimension(), 0.0);
        continue;
      }
      std::vector<double> v = provider_->embed(name);
      if (v.size() != provider_->dimension()) {
        throw AlignmentError("provider returned a vector of wrong dimension");
      }
      vectors.push_back(std::move(v));
    }
    cache.vectors = std::move(vectors);
  });
  return cache.vectors;
}

AlignmentResult Aligner::align(std::string_view query, EntityKind kind) const {
  AlignmentResult result;
  result.query = std::string(query);
  std::string key = normalize_term(query, cfg_.case_sensitive);
  if (key.empty()) return result;
  const std::vector<Candidate> &pool = candidates(kind);

  // Candidates are sorted by id, so the first hit wins every tie.
  for (const Candidate &c : pool) {
    if (c.key == key) {
      result.matched = c.id;
      result.stage = AlignStage::kExact;
      result.score = 0.0;
      return result;
    }
  }

  std::size_t best = std::numeric_limits<std::size_t>::max();
  const Candidate *best_candidate = nullptr;
  const auto limit = static_cast<std::size_t>(cfg_.max_edit_distance);
  for (const Candidate &c : pool) {
    std::size_t gap = c.key.size() > key.size() ? c.key.size() - key.size()
                                                : key.size() - c.key.size();
    if (gap > limit || gap >= best) continue;
    std::size_t d = levenshtein(key, c.key);
    if (d <= limit && d < best) {
      best = d;
      best_candidate = &c;
    }
  }
  if (best_candidate != nullptr) {
    result.matched = best_candidate->id;
    result.stage = AlignStage::kEditDistance;
    result.score = static_cast<double>(best);
    return result;
  }

  if (provider_ == nullptr || pool.empty() || !provider_->covers(query)) {
    return result;
  }
  std::vector<double> q = provider_->embed(query);
  if (q.size() != provider_->dimension()) {
    throw AlignmentError("provider returned a vector of wrong dimension");
  }
  const std::vector<std::vector<double>> &vectors = embeddings(kind);
  double best_sim = -std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double sim = cosine(q, vectors[i]);
    if (sim > best_sim) {
      best_sim = sim;
      best_index = i;
    }
  }
  if (best_sim >= cfg_.tau) {
    result.matched = pool[best_index].id;
    result.stage = AlignStage::kEmbedding;
    result.score = best_sim;
  }
  return result;
}

AlignmentResult align(std::string_view query, const KnowledgeGraph &kg,
                      EntityKind kind, const EmbeddingProvider *provider,
                      const AlignConfig &cfg) {
  return Aligner(kg, provider, cfg).align(query, kind);
}

Mentions extract_mentions(const StructuredAnswer &answer) {
  std::set<std::string> asserted;
  for (const std::string &term : answer.asserted) {
    asserted.insert(normalize_term(term));
  }
  for (const std::string &term : answer.denied) {
    if (asserted.count(normalize_term(term)) != 0) {
      throw ArgumentError("term '" + term +
                          "' is both asserted and denied in one answer");
    }
  }
  return Mentions{answer.asserted, answer.denied};
}

}  // namespace dxgraph
