#include "dxgraph/service.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <istream>
#include <string>

#include "httplib.h"

namespace dxgraph {

using json = nlohmann::json;

struct SessionService::Entry {
  std::string id;
  std::string created_at;
  std::shared_ptr<const Aligner> aligner;  // keeps the KG alive
  std::optional<CaseFile> source;
  std::unique_ptr<Consultation> session;
  std::mutex mu;
};

namespace {

Reply error_reply(int status, std::string_view code, std::string_view message) {
  return {status, json{{"error", code}, {"message", message}}};
}

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_id(std::uint64_t n) {
  std::string digits = std::to_string(n);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return "s" + digits;
}

std::string string_field(const json &obj, const char *key) {
  if (!obj.contains(key)) return {};
  const json &v = obj.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ArgumentError(std::string("field '") + key + "' must be a string");
}

}  // namespace

json plan_to_json(const Consultation &session) {
  json out = json::array();
  if (session.terminated()) return out;
  for (const ScoredSymptom &s : session.plan().ranked) {
    out.push_back({{"symptom", s.symptom},
                   {"name", session.kg().entity(s.symptom).name},
                   {"ig", s.ig}});
  }
  return out;
}

json snapshot(const Consultation &session, const std::string &id,
              const std::string &created_at) {
  json question = nullptr;
  if (const auto &q = session.pending()) {
    question = {{"symptom", q->symptom},
                {"name", q->name},
                {"ig", q->ig},
                {"refutation", q->refutation}};
  }
  json differential = json::array();
  for (const DiseaseProbability &e : session.differential().entries()) {
    differential.push_back({{"disease", e.disease},
                            {"name", session.kg().entity(e.disease).name},
                            {"probability", e.probability}});
  }
  json trace = json::array();
  for (const TurnLog &log : session.trace()) trace.push_back(to_json(log));

  json out{{"id", id},
           {"created_at", created_at},
           {"status", session.terminated() ? "Terminated" : "AwaitingAnswer"},
           {"turn", session.trace().size()},
           {"question", std::move(question)},
           {"differential", std::move(differential)},
           {"plan", plan_to_json(session)},
           {"record", to_json(session.record())},
           {"degraded_start", session.degraded_start()},
           {"termination", nullptr},
           {"final_diagnosis", nullptr},
           {"trace", std::move(trace)}};
  if (session.terminated()) {
    const std::string &leader = session.differential().leader();
    out["termination"] = to_string(*session.reason());
    out["final_diagnosis"] = {{"disease", leader},
                              {"name", session.kg().entity(leader).name}};
  }
  return out;
}

SessionService::SessionService(SessionConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

SessionService::~SessionService() = default;

void SessionService::load_kg(KnowledgeGraph kg,
                             std::unique_ptr<EmbeddingProvider> provider) {
  auto g = std::make_shared<const KnowledgeGraph>(std::move(kg));
  std::shared_ptr<const EmbeddingProvider> p(std::move(provider));
  // the aligner borrows both; the deleter keeps them alive with it
  auto *raw = new Aligner(*g, p.get(), cfg_.align);
  std::shared_ptr<const Aligner> a(raw, [g, p](const Aligner *x) { delete x; });
  std::unique_lock lock(mu_);
  kg_ = std::move(g);
  provider_ = std::move(p);
  aligner_ = std::move(a);
}

void SessionService::set_cases(std::vector<CaseFile> cases) {
  std::unique_lock lock(mu_);
  cases_.clear();
  for (CaseFile &c : cases) {
    std::string id = c.id;
    cases_.insert_or_assign(std::move(id), std::move(c));
  }
}

bool SessionService::kg_loaded() const {
  std::shared_lock lock(mu_);
  return aligner_ != nullptr;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(mu_);
  return sessions_.size();
}

void SessionService::open_journal(const std::filesystem::path &path) {
  std::lock_guard lock(journal_mu_);
  journal_.open(path, std::ios::app);
  if (!journal_) throw LookupError("cannot open journal " + path.string());
}

void SessionService::journal(const json &line) {
  std::lock_guard lock(journal_mu_);
  if (!journal_.is_open()) return;
  journal_ << line.dump() << '\n';
  journal_.flush();
}

std::shared_ptr<SessionService::Entry> SessionService::find(
    const std::string &id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Reply SessionService::health() const {
  std::shared_lock lock(mu_);
  json body{{"status", "ok"},
            {"kg_loaded", aligner_ != nullptr},
            {"sessions", sessions_.size()},
            {"cases", cases_.size()}};
  if (kg_) {
    body["diseases"] = kg_->disease_ids().size();
    body["symptoms"] = kg_->symptom_ids().size();
  }
  return {200, std::move(body)};
}

Reply SessionService::create(const json &request) {
  std::string created_at = utc_now();
  std::string id;
  {
    std::unique_lock lock(mu_);
    id = format_id(next_id_++);
  }
  Reply r = create_locked(request, id, created_at);
  if (r.status == 201) {
    journal(json{{"op", "create"},
                 {"id", id},
                 {"created_at", created_at},
                 {"request", request}});
  }
  return r;
}

Reply SessionService::create_locked(const json &request, std::string id,
                                    std::string created_at) {
  std::shared_ptr<const Aligner> aligner;
  std::optional<CaseFile> source;
  {
    std::shared_lock lock(mu_);
    aligner = aligner_;
    if (aligner && request.is_object() && request.contains("case_ref")) {
      const json &ref = request.at("case_ref");
      if (!ref.is_string()) {
        return error_reply(400, "invalid-request", "case_ref must be a string");
      }
      auto it = cases_.find(ref.get<std::string>());
      if (it == cases_.end()) {
        return error_reply(404, "unknown-case",
                           "no case with id '" + ref.get<std::string>() + "'");
      }
      source = it->second;
    }
  }
  if (!aligner) return error_reply(503, "kg-not-loaded", "no knowledge graph loaded");
  if (!request.is_object()) {
    return error_reply(400, "invalid-request", "request must be a JSON object");
  }

  try {
    SessionConfig cfg = cfg_;
    if (request.contains("policy")) {
      cfg.policy = policy_from_string(request.at("policy").get<std::string>());
    }
    if (request.contains("seed")) cfg.seed = request.at("seed").get<std::uint64_t>();
    bool interactive = request.value("interactive", !source.has_value());

    PatientProfile profile;
    std::vector<std::string> reported;
    if (source) {
      profile = profile_from_case(*source);
      reported.push_back(source->primary_symptom);
    } else {
      if (!request.contains("profile") || !request.at("profile").is_object()) {
        return error_reply(400, "invalid-request",
                           "either case_ref or profile is required");
      }
      const json &p = request.at("profile");
      profile.age = string_field(p, "age");
      profile.gender = string_field(p, "gender");
      profile.chief_complaint = string_field(p, "chief");
      if (profile.chief_complaint.empty()) {
        profile.chief_complaint = string_field(p, "chief_complaint");
      }
      reported.push_back(profile.chief_complaint);
    }

    auto entry = std::make_shared<Entry>();
    entry->id = id;
    entry->created_at = std::move(created_at);
    entry->aligner = aligner;
    entry->source = source;
    entry->session = std::make_unique<Consultation>(*aligner, cfg, profile, reported);
    if (source && !interactive) {
      CasePatientOracle oracle(*source, *aligner);
      while (entry->session->pending()) step(*entry->session, oracle);
    }
    json body = snapshot(*entry->session, entry->id, entry->created_at);
    std::unique_lock lock(mu_);
    sessions_.emplace(std::move(id), std::move(entry));
    return {201, std::move(body)};
  } catch (const json::exception &e) {
    return error_reply(400, "invalid-request", e.what());
  } catch (const ArgumentError &e) {
    return error_reply(400, "invalid-request", e.what());
  } catch (const SessionError &e) {
    return error_reply(500, "session-failed", e.what());
  }
}

Reply SessionService::get(const std::string &id) const {
  std::shared_ptr<Entry> e = find(id);
  if (!e) return error_reply(404, "unknown-session", "no session '" + id + "'");
  std::lock_guard lock(e->mu);
  return {200, snapshot(*e->session, e->id, e->created_at)};
}

Reply SessionService::plan(const std::string &id) const {
  std::shared_ptr<Entry> e = find(id);
  if (!e) return error_reply(404, "unknown-session", "no session '" + id + "'");
  std::lock_guard lock(e->mu);
  const Consultation &s = *e->session;
  json q = nullptr;
  if (s.pending()) q = s.pending()->symptom;
  return {200, json{{"id", e->id},
                    {"question", std::move(q)},
                    {"k_ratio", s.config().inference.k_ratio},
                    {"entropy", entropy(s.differential())},
                    {"plan", plan_to_json(s)}}};
}

Reply SessionService::answer(const std::string &id, const json &request) {
  return answer_impl(id, request, true);
}

Reply SessionService::answer_impl(const std::string &id, const json &request,
                                  bool record) {
  std::shared_ptr<Entry> e = find(id);
  if (!e) return error_reply(404, "unknown-session", "no session '" + id + "'");
  if (!request.is_object()) {
    return error_reply(400, "invalid-request", "request must be a JSON object");
  }
  const bool has_polarity = request.contains("polarity");
  const bool has_exam = request.contains("exam");
  if (has_polarity == has_exam) {
    return error_reply(400, "invalid-request",
                       "exactly one of 'polarity' or 'exam' is required");
  }

  std::lock_guard lock(e->mu);
  Consultation &s = *e->session;
  if (s.terminated()) {
    return error_reply(409, "session-terminated", "session " + id + " has terminated");
  }
  json extra = json::object();
  if (has_polarity) {
    const json &p = request.at("polarity");
    std::string text = p.is_string() ? p.get<std::string>() : p.dump();
    AnswerPolarity polarity;
    if (text == "present") {
      polarity = AnswerPolarity::kPresent;
    } else if (text == "absent") {
      polarity = AnswerPolarity::kAbsent;
    } else if (text == "unknown") {
      polarity = AnswerPolarity::kUnknown;
    } else {
      return error_reply(400, "invalid-polarity",
                         "polarity must be present, absent or unknown, got " + text);
    }
    s.answer(polarity);
  } else {
    const json &x = request.at("exam");
    if (!x.is_string() || normalize_term(x.get<std::string>()).empty()) {
      return error_reply(400, "invalid-request", "exam must be a non-empty string");
    }
    std::string name = x.get<std::string>();
    CaseMeasurementOracle oracle(e->source ? e->source->test_results : NamedText{});
    extra["exam"] = {{"name", name}, {"result", s.request_exam(name, oracle)}};
  }
  if (record) journal(json{{"op", "answer"}, {"id", id}, {"request", request}});
  json body = snapshot(s, e->id, e->created_at);
  body.update(extra);
  return {200, std::move(body)};
}

void SessionService::replay(std::istream &in) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ParseError("journal", n, e.what());
    }
    const std::string op = j.value("op", "");
    const std::string id = j.value("id", "");
    Reply r;
    if (op == "create") {
      r = create_locked(j.at("request"), id, j.value("created_at", ""));
      std::unique_lock lock(mu_);
      // keep fresh ids past the replayed ones
      if (id.size() > 1) {
        next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
      }
    } else if (op == "answer") {
      r = answer_impl(id, j.at("request"), false);
    } else {
      throw ParseError("journal", n, "unknown op '" + op + "'");
    }
    if (r.status >= 400) {
      throw ParseError("journal", n, r.body.value("message", "replay failed"));
    }
  }
}

// -- HTTP --------------------------------------------------------------------

namespace {

void send(httplib::Response &res, const Reply &r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<json> parse_body(const httplib::Request &req, httplib::Response &res) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error &e) {
    send(res, error_reply(400, "invalid-json", e.what()));
    return std::nullopt;
  }
}

}  // namespace

void mount(httplib::Server &server, SessionService &service) {
  server.Get("/v1/healthz", [&](const httplib::Request &, httplib::Response &res) {
    send(res, service.health());
  });
  server.Post("/v1/sessions", [&](const httplib::Request &req, httplib::Response &res) {
    if (auto body = parse_body(req, res)) send(res, service.create(*body));
  });
  server.Get(R"(/v1/sessions/([^/]+))",
             [&](const httplib::Request &req, httplib::Response &res) {
               send(res, service.get(req.matches[1]));
             });
  server.Get(R"(/v1/sessions/([^/]+)/plan)",
             [&](const httplib::Request &req, httplib::Response &res) {
               send(res, service.plan(req.matches[1]));
             });
  server.Post(R"(/v1/sessions/([^/]+)/answer)",
              [&](const httplib::Request &req, httplib::Response &res) {
                if (auto body = parse_body(req, res)) {
                  send(res, service.answer(req.matches[1], *body));
                }
              });
  server.set_exception_handler(
      [](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception &e) {
          what = e.what();
        } catch (...) {
        }
        send(res, error_reply(500, "internal", what));
      });
}

}  // namespace dxgraph
