#ifndef DXGRAPH_TESTS_SUPPORT_H_
#define DXGRAPH_TESTS_SUPPORT_H_

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dxgraph/kg_store.h"

namespace testing {

inline std::filesystem::path data(const std::string &name) {
  return std::filesystem::path(DXGRAPH_TEST_DATA) / name;
}

// D1-{fever,cough}, D2-{cough,sneeze}
inline dxgraph::KnowledgeGraph tiny_kg() {
  return dxgraph::load_kg(data("tiny_nodes.tsv"), data("tiny_edges.tsv"));
}

inline dxgraph::KnowledgeGraph abdo_kg() {
  return dxgraph::load_kg(data("abdo_nodes.tsv"), data("abdo_edges.tsv"));
}

struct RandomGraph {
  std::vector<std::string> diseases;
  std::vector<std::string> symptoms;
  std::map<std::string, dxgraph::IdSet, std::less<>> adjacency;
};

// Small bipartite graph; every disease gets at least one symptom.
inline RandomGraph random_graph(std::mt19937_64 &rng, int max_diseases,
                                int max_symptoms) {
  RandomGraph g;
  int nd = 1 + static_cast<int>(rng() % max_diseases);
  int ns = 1 + static_cast<int>(rng() % max_symptoms);
  for (int i = 0; i < ns; ++i) g.symptoms.push_back("s" + std::to_string(i));
  for (int i = 0; i < nd; ++i) {
    std::string d = "d" + std::to_string(i);
    g.diseases.push_back(d);
    dxgraph::IdSet &n = g.adjacency[d];
    for (const std::string &s : g.symptoms) {
      if (rng() % 3 == 0) n.insert(s);
    }
    if (n.empty()) n.insert(g.symptoms[rng() % g.symptoms.size()]);
  }
  return g;
}

}  // namespace testing

#endif  // DXGRAPH_TESTS_SUPPORT_H_
