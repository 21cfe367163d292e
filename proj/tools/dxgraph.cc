// dxgraph command-line entry point: load-kg, bench, consult, serve, gen-cases.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dxgraph/bench.h"
#include "dxgraph/case_file.h"
#include "dxgraph/entity_align.h"
#include "dxgraph/kg_store.h"
#include "dxgraph/service.h"
#include "dxgraph/session.h"
#include "httplib.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dxgraph;

namespace {

constexpr int kExitError = 1;
constexpr int kExitBadPath = 2;
constexpr int kExitSchema = 3;

struct Sources {
  std::vector<std::string> kg;  // nodes, edges
  std::string vectors;
  bool trigram = false;
};

std::string env_or(const char *name, std::string fallback) {
  const char *v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

void add_kg_options(CLI::App *cmd, Sources &src) {
  cmd->add_option("--kg", src.kg, "node and edge tables: nodes.tsv,edges.tsv")
      ->delimiter(',')
      ->expected(2);
  cmd->add_option("--vectors", src.vectors, "embedding table (#dim=d header, name<TAB>v1,...,vd)");
  cmd->add_flag("--trigram", src.trigram, "use character-trigram hash embeddings");
}

KnowledgeGraph load_graph(const Sources &src) {
  std::string nodes = src.kg.size() == 2 ? src.kg[0] : env_or("DXGRAPH_KG_NODES", "");
  std::string edges = src.kg.size() == 2 ? src.kg[1] : env_or("DXGRAPH_KG_EDGES", "");
  if (nodes.empty() || edges.empty()) {
    throw LookupError("no graph given: pass --kg or set DXGRAPH_KG_NODES/DXGRAPH_KG_EDGES");
  }
  return load_kg(fs::path(nodes), fs::path(edges));
}

std::unique_ptr<EmbeddingProvider> load_provider(const Sources &src) {
  std::string path = src.vectors.empty() ? env_or("DXGRAPH_VECTORS", "") : src.vectors;
  if (!path.empty()) {
    return std::make_unique<TableEmbeddingProvider>(TableEmbeddingProvider::load(fs::path(path)));
  }
  if (src.trigram) return std::make_unique<TrigramHashProvider>();
  return nullptr;
}

// "1..10" or "3,5,8"
std::vector<std::uint64_t> parse_seeds(const std::string &text) {
  std::vector<std::uint64_t> out;
  auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      std::uint64_t lo = std::stoull(text.substr(0, dots));
      std::uint64_t hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw ArgumentError("empty seed range " + text);
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      std::stringstream ss(text);
      std::string part;
      while (std::getline(ss, part, ',')) out.push_back(std::stoull(part));
    }
  } catch (const std::logic_error &) {
    throw ArgumentError("bad seed list '" + text + "'");
  }
  if (out.empty()) throw ArgumentError("bad seed list '" + text + "'");
  return out;
}

void write_file(const fs::path &path, const std::string &text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw LookupError("cannot write " + path.string());
  out << text;
}

// Maps library errors onto exit codes.
template <class F>
int guarded(F &&body) {
  try {
    return body();
  } catch (const LookupError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadPath;
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const SchemaError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

struct BenchArgs {
  std::string cases;
  std::vector<std::string> policies{"info-gain"};
  std::uint64_t seed = 0;
  std::string seeds;
  std::string out = "bench-out";
  int t_max = 20;
  int stagnation_n = 3;
};

int run_bench(const Sources &src, const BenchArgs &args) {
  return guarded([&] {
    KnowledgeGraph kg = load_graph(src);
    std::unique_ptr<EmbeddingProvider> provider = load_provider(src);
    std::vector<std::string> warnings;
    std::vector<CaseFile> cases = load_cases(fs::path(args.cases), &warnings);
    for (const std::string &w : warnings) std::cerr << "warning: " << w << '\n';

    std::vector<std::uint64_t> seeds =
        args.seeds.empty() ? std::vector<std::uint64_t>{args.seed} : parse_seeds(args.seeds);
    SessionConfig cfg;
    cfg.t_max = args.t_max;
    cfg.stagnation_n = args.stagnation_n;
    Aligner aligner(kg, provider.get(), cfg.align);

    std::vector<BenchReport> reports;
    fs::path out(args.out);
    for (const std::string &name : args.policies) {
      cfg.policy = policy_from_string(name);
      for (std::uint64_t seed : seeds) {
        cfg.seed = seed;
        BenchReport r = run_benchmark(cases, aligner, cfg);
        write_file(out / ("report-" + std::string(to_string(cfg.policy)) + "-seed" +
                          std::to_string(seed) + ".json"),
                   to_json(r).dump(2) + "\n");
        reports.push_back(std::move(r));
      }
    }
    std::string table = format_table(reports);
    write_file(out / "table.txt", table);
    if (seeds.size() > 1 || args.policies.size() > 1) {
      write_file(out / "aggregate.json", to_json(aggregate(reports)).dump(2) + "\n");
    }
    std::cout << table;
    return 0;
  });
}

int run_load_kg(const Sources &src) {
  return guarded([&] {
    KnowledgeGraph kg = load_graph(src);
    std::size_t ds = 0, dd = 0;
    for (const KgEdge &e : kg.edges()) {
      (e.relation == Relation::kDiseaseSymptom ? ds : dd) += 1;
    }
    nlohmann::ordered_json j{{"entities", kg.entities().size()},
                             {"diseases", kg.disease_ids().size()},
                             {"symptoms", kg.symptom_ids().size()},
                             {"edges", kg.edges().size()},
                             {"disease_symptom_edges", ds},
                             {"disease_disease_edges", dd}};
    std::cout << j.dump(2) << '\n';
    return 0;
  });
}

struct ConsultArgs {
  std::string cases;
  std::string case_ref;
  std::string age;
  std::string gender;
  std::string chief;
  std::string policy = "info-gain";
  std::uint64_t seed = 0;
  std::string journal;
};

void print_turn(const nlohmann::json &snap, std::ostream &os) {
  os << "differential:";
  for (const auto &d : snap["differential"]) {
    os << "  " << d["name"].get<std::string>() << " "
       << d["probability"].get<double>();
  }
  os << '\n';
  if (snap["status"] == "Terminated") {
    os << "terminated (" << snap["termination"].get<std::string>()
       << "): " << snap["final_diagnosis"]["name"].get<std::string>() << '\n';
  } else {
    os << "Q" << snap["turn"].get<int>() + 1 << ": do you have "
       << snap["question"]["name"].get<std::string>() << "? [p/a/u, exam NAME, plan, quit]\n";
  }
}

int run_consult(const Sources &src, const ConsultArgs &args) {
  return guarded([&] {
    SessionConfig cfg;
    SessionService service(cfg);
    service.load_kg(load_graph(src), load_provider(src));
    if (!args.cases.empty()) service.set_cases(load_cases(fs::path(args.cases)));
    if (!args.journal.empty()) service.open_journal(args.journal);

    nlohmann::json req{{"policy", args.policy}, {"seed", args.seed}};
    if (!args.case_ref.empty()) {
      req["case_ref"] = args.case_ref;
      req["interactive"] = true;
    } else {
      req["profile"] = {{"age", args.age}, {"gender", args.gender}, {"chief", args.chief}};
    }
    Reply r = service.create(req);
    if (r.status >= 400) throw ArgumentError(r.body.value("message", "cannot create session"));
    const std::string id = r.body["id"];
    print_turn(r.body, std::cout);

    std::string line;
    while (r.body["status"] != "Terminated" && std::getline(std::cin, line)) {
      line = normalize_whitespace(line);
      if (line.empty()) continue;
      if (line == "quit" || line == "q") break;
      if (line == "plan") {
        for (const auto &p : service.plan(id).body["plan"]) {
          std::cout << "  " << p["name"].get<std::string>() << "  ig=" << p["ig"].get<double>()
                    << '\n';
        }
        continue;
      }
      nlohmann::json ans;
      if (line.rfind("exam ", 0) == 0) {
        ans["exam"] = line.substr(5);
      } else if (line == "p" || line == "present" || line == "y") {
        ans["polarity"] = "present";
      } else if (line == "a" || line == "absent" || line == "n") {
        ans["polarity"] = "absent";
      } else if (line == "u" || line == "unknown") {
        ans["polarity"] = "unknown";
      } else {
        std::cout << "answer p, a, u, exam NAME, plan or quit\n";
        continue;
      }
      Reply next = service.answer(id, ans);
      if (next.status >= 400) {
        std::cout << "error: " << next.body.value("message", "") << '\n';
        continue;
      }
      r = std::move(next);
      if (r.body.contains("exam")) {
        std::cout << r.body["exam"]["name"].get<std::string>() << ": "
                  << r.body["exam"]["result"].get<std::string>() << '\n';
      }
      print_turn(r.body, std::cout);
    }
    std::cout << "record:\n" << r.body["record"].dump(2) << '\n';
    return 0;
  });
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cases;
  std::string journal;
  bool replay = false;
};

int run_serve(const Sources &src, const ServeArgs &args) {
  return guarded([&] {
    SessionService service;
    service.load_kg(load_graph(src), load_provider(src));
    if (!args.cases.empty()) service.set_cases(load_cases(fs::path(args.cases)));
    if (!args.journal.empty()) {
      if (args.replay && fs::exists(args.journal)) {
        std::ifstream in(args.journal);
        service.replay(in);
        std::cerr << "replayed " << service.session_count() << " sessions\n";
      }
      service.open_journal(args.journal);
    }
    httplib::Server server;
    mount(server, service);
    std::cerr << "listening on " << args.host << ":" << args.port << '\n';
    if (!server.listen(args.host, args.port)) {
      std::cerr << "error: cannot listen on " << args.host << ":" << args.port << '\n';
      return kExitError;
    }
    return 0;
  });
}

struct GenArgs {
  std::string out = "cases.json";
  std::size_t n = 50;
  double dropout = 0.2;
  double distractor = 0.1;
  std::uint64_t seed = 0;
  SyntheticGraphSpec graph;
  std::vector<std::string> kg_out;
};

int run_gen(const Sources &src, const GenArgs &args) {
  return guarded([&] {
    bool synthetic = src.kg.empty() && env_or("DXGRAPH_KG_NODES", "").empty();
    KnowledgeGraph kg = synthetic ? generate_synthetic_kg(args.graph, args.seed) : load_graph(src);
    if (args.kg_out.size() == 2) save_kg(kg, fs::path(args.kg_out[0]), fs::path(args.kg_out[1]));
    std::vector<CaseFile> cases =
        generate_synthetic_corpus(kg, args.n, {args.dropout, args.distractor}, args.seed);
    save_cases(cases, args.out);
    std::cerr << "wrote " << cases.size() << " cases to " << args.out << '\n';
    return 0;
  });
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"dxgraph: knowledge-graph guided active diagnosis"};
  app.require_subcommand(1);
  Sources src;
  int code = 0;

  auto *load = app.add_subcommand("load-kg", "load and validate a graph, print counts");
  add_kg_options(load, src);
  load->callback([&] { code = run_load_kg(src); });

  BenchArgs bench;
  auto *b = app.add_subcommand("bench", "run the benchmark over a case file");
  add_kg_options(b, src);
  b->add_option("--cases", bench.cases, "case JSON")->required();
  b->add_option("--policy", bench.policies, "info-gain, random, degree (repeatable)")
      ->delimiter(',');
  b->add_option("--seed", bench.seed, "seed");
  b->add_option("--seeds", bench.seeds, "seed range 1..10 or list 1,2,3");
  b->add_option("--out", bench.out, "output directory");
  b->add_option("--t-max", bench.t_max, "question budget");
  b->add_option("--stagnation", bench.stagnation_n, "turns of unchanged differential");
  b->callback([&] { code = run_bench(src, bench); });

  ConsultArgs consult;
  auto *c = app.add_subcommand("consult", "interactive consultation on the terminal");
  add_kg_options(c, src);
  c->add_option("--cases", consult.cases, "case JSON (for --case and exam results)");
  c->add_option("--case", consult.case_ref, "case id to take the profile and exams from");
  c->add_option("--age", consult.age);
  c->add_option("--gender", consult.gender);
  c->add_option("--chief", consult.chief, "chief complaint");
  c->add_option("--policy", consult.policy);
  c->add_option("--seed", consult.seed);
  c->add_option("--journal", consult.journal, "append requests to this JSONL file");
  c->callback([&] { code = run_consult(src, consult); });

  ServeArgs serve;
  auto *s = app.add_subcommand("serve", "HTTP service under /v1/");
  add_kg_options(s, src);
  s->add_option("--port", serve.port);
  s->add_option("--host", serve.host);
  s->add_option("--cases", serve.cases, "case JSON for case_ref sessions");
  s->add_option("--journal", serve.journal, "append-only session journal (JSONL)");
  s->add_flag("--replay", serve.replay, "restore sessions from --journal first");
  s->callback([&] { code = run_serve(src, serve); });

  GenArgs gen;
  auto *g = app.add_subcommand("gen-cases", "synthetic case corpus (and graph)");
  add_kg_options(g, src);
  g->add_option("--out", gen.out);
  g->add_option("-n,--cases", gen.n);
  g->add_option("--dropout", gen.dropout);
  g->add_option("--distractor", gen.distractor);
  g->add_option("--seed", gen.seed);
  g->add_option("--diseases", gen.graph.diseases, "synthetic graph size");
  g->add_option("--symptoms", gen.graph.symptoms);
  g->add_option("--min-degree", gen.graph.min_symptoms_per_disease);
  g->add_option("--max-degree", gen.graph.max_symptoms_per_disease);
  g->add_option("--kg-out", gen.kg_out, "write the graph: nodes.tsv,edges.tsv")
      ->delimiter(',')
      ->expected(2);
  g->callback([&] { code = run_gen(src, gen); });

  CLI11_PARSE(app, argc, argv);
  return code;
}
