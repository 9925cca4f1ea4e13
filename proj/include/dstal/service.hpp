#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dstal/al_loop.hpp"
#include "dstal/corpus.hpp"
#include "dstal/oracle.hpp"
#include "dstal/scorer.hpp"

namespace dstal {

struct HttpRequest {
  std::string method;  // "GET" | "POST"
  std::string path;
  std::string body;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lowercase names
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  json json_body() const { return json::parse(body); }
};

struct ServiceOptions {
  std::filesystem::path persist_dir;  // empty: in-memory only
  std::string token;                  // empty: no auth header required
  std::int64_t claim_timeout_ms = 10 * 60 * 1000;
  // Adds the current model's argmax state to task payloads as "suggestion".
  bool suggest_labels = false;
  LexicalScorerParams scorer;
  HumanLabelQueue::Clock clock;  // default: wall clock
};

// Human-in-the-loop front end for the active-learning loop. Each session owns a scorer,
// an ActiveLearner, and a task queue. A round finalizes (retrains) on its
// last label; rounds can also be cancelled, returning dialogues to U.
//
//   POST /sessions                       create from an AL config -> 201
//   GET  /sessions/{id}                  session summary
//   POST /sessions/{id}/rounds           open a round (409 while one is open)
//   POST /sessions/{id}/rounds/cancel    cancel the open round
//   GET  /sessions/{id}/tasks            claim pending tasks (?annotator=&limit=)
//   GET  /sessions/{id}/metrics          |L|, reading cost, last evaluation
//   GET  /sessions/{id}/export           L as JSON Lines
//   GET  /sessions/{id}/snapshot         scorer parameters
//   GET  /tasks/{tid}                    one pending task
//   POST /tasks/{tid}/label              submit a state (404/409/422)
//   GET  /config                         ontology and slot forms for clients
class AnnotationService {
 public:
  AnnotationService(const Corpus& corpus, ServiceOptions options);
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  HttpResponse handle(const HttpRequest& request);

  std::vector<std::string> session_ids() const;

 private:
  struct Session;

  std::shared_ptr<Session> session(const std::string& id) const;
  HttpResponse route(const HttpRequest& request);

  HttpResponse create_session(const HttpRequest& request);
  HttpResponse get_session(Session& s);
  HttpResponse open_round(Session& s);
  HttpResponse cancel_round(Session& s);
  HttpResponse claim_tasks(Session& s, const HttpRequest& request);
  HttpResponse metrics(Session& s);
  HttpResponse export_labels(Session& s);
  HttpResponse snapshot(Session& s);
  HttpResponse get_task(const std::string& task_id);
  HttpResponse submit_label(const std::string& task_id, const HttpRequest& request);
  HttpResponse config();

  json task_payload(const Session& s, const PendingTask& task) const;
  json session_summary(const Session& s) const;
  void finalize_round(Session& s);
  void persist(const Session& s) const;
  void resume_sessions();

  const Corpus& corpus_;
  ServiceOptions options_;
  std::vector<std::size_t> pool_;
  std::vector<std::size_t> test_;
  std::vector<std::size_t> validation_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_session_ = 1;
};

// Binds the service to host:port (port 0 picks a free port) and serves on
// a background thread until stop() or destruction.
class HttpServer {
 public:
  HttpServer(AnnotationService& service, std::string host, int port);
  ~HttpServer();

  int port() const { return port_; }
  void stop();
  // Blocks the caller until the server stops.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace dstal
