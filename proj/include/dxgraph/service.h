#ifndef DXGRAPH_SERVICE_H_
#define DXGRAPH_SERVICE_H_

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "dxgraph/case_file.h"
#include "dxgraph/entity_align.h"
#include "dxgraph/kg_store.h"
#include "dxgraph/session.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace dxgraph {

struct Reply {
  int status = 200;
  nlohmann::json body;
};

// In-process session registry behind the HTTP facade. Every method returns
// the HTTP status and payload; errors are {"error": code, "message": text}.
class SessionService {
 public:
  explicit SessionService(SessionConfig cfg = {});
  ~SessionService();

  void load_kg(KnowledgeGraph kg, std::unique_ptr<EmbeddingProvider> provider);
  void set_cases(std::vector<CaseFile> cases);
  bool kg_loaded() const;

  // Appends every accepted create/answer request to `path` as JSON lines.
  void open_journal(const std::filesystem::path &path);
  // Re-applies journal lines; sessions keep their recorded ids.
  void replay(std::istream &journal);

  // {"case_ref": id, "interactive": bool} or
  // {"profile": {"age", "gender", "chief"}}; optional "policy", "seed".
  Reply create(const nlohmann::json &request);
  Reply get(const std::string &id) const;
  // {"polarity": "present"|"absent"|"unknown"} or {"exam": name}
  Reply answer(const std::string &id, const nlohmann::json &request);
  Reply plan(const std::string &id) const;
  Reply health() const;

  std::size_t session_count() const;

 private:
  struct Entry;

  Reply create_locked(const nlohmann::json &request, std::string id,
                      std::string created_at);
  Reply answer_impl(const std::string &id, const nlohmann::json &request,
                    bool record);
  std::shared_ptr<Entry> find(const std::string &id) const;
  void journal(const nlohmann::json &line);

  SessionConfig cfg_;
  std::shared_ptr<const KnowledgeGraph> kg_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  std::shared_ptr<const Aligner> aligner_;
  std::map<std::string, CaseFile, std::less<>> cases_;

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>, std::less<>> sessions_;
  std::uint64_t next_id_ = 1;

  std::mutex journal_mu_;
  std::ofstream journal_;
};

// Snapshot payload for one consultation.
nlohmann::json snapshot(const Consultation &session, const std::string &id,
                        const std::string &created_at);
nlohmann::json plan_to_json(const Consultation &session);

// Routes /v1/... onto `service`.
void mount(httplib::Server &server, SessionService &service);

}  // namespace dxgraph

#endif  // DXGRAPH_SERVICE_H_
