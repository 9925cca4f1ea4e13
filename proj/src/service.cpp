#include "dstal/service.hpp"

#include <fstream>
#include <sstream>

#include "dstal/errors.hpp"

namespace dstal {

struct AnnotationService::Session {
  std::string id;
  ALConfig config;
  LexicalScorerParams params;
  std::unique_ptr<LexicalScorer> scorer;
  std::unique_ptr<ActiveLearner> learner;
  std::unique_ptr<HumanLabelQueue> queue;
  std::unique_ptr<LabelLog> log;

  std::vector<std::string> round_tasks;  // aligned with the open plan's selections
  std::map<std::string, LabelRecord> round_labels;
  json history = json::array();  // IterationRecord JSON per committed round

  std::mutex mutex;
  std::atomic<bool> retraining{false};
};

namespace {

HttpResponse json_response(int status, const json& body) {
  return HttpResponse{status, "application/json", body.dump()};
}

HttpResponse error_response(int status, const std::string& kind, const std::string& message,
                            const std::string& slot = {}) {
  json err = {{"kind", kind}, {"message", message}};
  if (!slot.empty()) err["slot"] = slot;
  return json_response(status, {{"error", err}});
}

int status_of(const Error& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (dynamic_cast<const ValidationError*>(&e)) return 422;
  if (dynamic_cast<const RangeError*>(&e)) return 422;
  if (dynamic_cast<const ParseError*>(&e)) return 400;
  return 500;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

json slot_forms(const Ontology& ontology) {
  json slots = json::array();
  for (std::size_t j = 0; j < ontology.size(); ++j) {
    const auto& spec = ontology.spec(j);
    slots.push_back({{"slot", spec.slot.key()},
                     {"domain", spec.slot.domain},
                     {"name", spec.slot.slot},
                     {"kind", std::string(to_string(spec.kind))},
                     {"open", spec.kind != SlotKind::closed},
                     {"candidates", ontology.candidates(j)}});
  }
  return slots;
}

json reading_cost_json(const ReadingCost& rc) {
  if (rc.n == 0) return nullptr;
  return {{"mean", rc.mean}, {"stddev", rc.stddev}, {"percent", rc.percent()}, {"n", rc.n}};
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string session_of_task(const std::string& task_id) {
  auto dot = task_id.find('.');
  if (dot == std::string::npos) throw NotFoundError("unknown task " + task_id);
  return task_id.substr(0, dot);
}

}  // namespace

AnnotationService::AnnotationService(const Corpus& corpus, ServiceOptions options)
    : corpus_(corpus), options_(std::move(options)) {
  pool_ = corpus_.split_indices("train");
  for (auto i : corpus_.split_indices("test")) {
    if (corpus_.at(i).gold_states) test_.push_back(i);
  }
  for (auto i : corpus_.split_indices("validation")) {
    if (corpus_.at(i).gold_states) validation_.push_back(i);
  }
  if (!options_.persist_dir.empty()) resume_sessions();
}

AnnotationService::~AnnotationService() = default;

std::vector<std::string> AnnotationService::session_ids() const {
  std::lock_guard lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<AnnotationService::Session> AnnotationService::session(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
  return it->second;
}

HttpResponse AnnotationService::handle(const HttpRequest& request) {
  if (!options_.token.empty()) {
    auto it = request.headers.find("x-auth-token");
    if (it == request.headers.end() || it->second != options_.token) {
      return error_response(401, "unauthorized", "missing or wrong X-Auth-Token header");
    }
  }
  try {
    return route(request);
  } catch (const ValidationError& e) {
    return error_response(422, e.kind(), e.what(), e.slot());
  } catch (const Error& e) {
    return error_response(status_of(e), e.kind(), e.what());
  } catch (const json::exception& e) {
    return error_response(400, "parse_error", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "error", e.what());
  }
}

HttpResponse AnnotationService::route(const HttpRequest& request) {
  const auto parts = split_path(request.path);
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";
  const auto n = parts.size();

  if (n == 1 && parts[0] == "config" && get) return config();
  if (n == 1 && parts[0] == "sessions") {
    if (post) return create_session(request);
    if (get) return json_response(200, {{"sessions", session_ids()}});
  }
  if (n >= 2 && parts[0] == "sessions") {
    auto s = session(parts[1]);
    if (n == 2 && get) return get_session(*s);
    if (n == 3 && parts[2] == "rounds" && post) return open_round(*s);
    if (n == 4 && parts[2] == "rounds" && parts[3] == "cancel" && post) return cancel_round(*s);
    if (n == 3 && parts[2] == "tasks" && get) return claim_tasks(*s, request);
    if (n == 3 && parts[2] == "metrics" && get) return metrics(*s);
    if (n == 3 && parts[2] == "export" && get) return export_labels(*s);
    if (n == 3 && parts[2] == "snapshot" && get) return snapshot(*s);
  }
  if (n == 2 && parts[0] == "tasks" && get) return get_task(parts[1]);
  if (n == 3 && parts[0] == "tasks" && parts[2] == "label" && post) return submit_label(parts[1], request);
  return error_response(404, "not_found", "no route for " + request.method + " " + request.path);
}

HttpResponse AnnotationService::config() {
  return json_response(200, {{"ontology", corpus_.ontology().to_json()},
                             {"slots", slot_forms(corpus_.ontology())},
                             {"none_value", kNoneValue},
                             {"auth_required", !options_.token.empty()},
                             {"claim_timeout_ms", options_.claim_timeout_ms},
                             {"suggestions", options_.suggest_labels}});
}

HttpResponse AnnotationService::create_session(const HttpRequest& request) {
  json body = request.body.empty() ? json::object() : json::parse(request.body);
  if (!body.is_object()) throw ParseError("session body must be a JSON object");
  ALConfig config = ALConfig::from_json(body);
  LexicalScorerParams params = options_.scorer;
  if (body.contains("scorer")) params = LexicalScorerParams::from_json(body.at("scorer"));

  auto s = std::make_shared<Session>();
  {
    std::lock_guard lock(sessions_mutex_);
    s->id = "s" + std::to_string(next_session_++);
  }
  s->config = config;
  s->params = params;
  s->scorer = std::make_unique<LexicalScorer>(corpus_.ontology(), params);
  s->learner = std::make_unique<ActiveLearner>(corpus_, config, *s->scorer, pool_);
  s->queue = std::make_unique<HumanLabelQueue>(corpus_.ontology(), s->id + ".t", options_.claim_timeout_ms,
                                               options_.clock);
  if (!options_.persist_dir.empty()) {
    s->log = std::make_unique<LabelLog>(options_.persist_dir / s->id / "labels.jsonl");
  }
  persist(*s);
  {
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(s->id, s);
  }
  json out = session_summary(*s);
  return json_response(201, out);
}

json AnnotationService::session_summary(const Session& s) const {
  const auto& pool = s.learner->pool();
  json out = {{"id", s.id},
              {"config", s.config.to_json()},
              {"scorer", s.params.to_json()},
              {"rounds_completed", s.learner->rounds_completed()},
              {"round_open", s.learner->round_open()},
              {"finished", s.learner->finished()},
              {"labelled", pool.labelled.size()},
              {"unlabelled", pool.unlabelled.size()}};
  if (s.learner->round_open()) {
    out["open_round"] = {{"round", s.learner->open_plan().round},
                         {"tasks", s.round_tasks},
                         {"pending", s.queue->pending_count()}};
  }
  return out;
}

HttpResponse AnnotationService::get_session(Session& s) {
  std::lock_guard lock(s.mutex);
  return json_response(200, session_summary(s));
}

HttpResponse AnnotationService::open_round(Session& s) {
  if (s.retraining) throw ConflictError("session " + s.id + " is retraining");
  std::lock_guard lock(s.mutex);
  if (s.learner->round_open()) {
    throw ConflictError("round " + std::to_string(s.learner->open_plan().round) + " is still open");
  }
  if (s.learner->finished()) throw ConflictError("session " + s.id + " has no rounds left");
  const auto& plan = s.learner->open_round();
  s.round_tasks.clear();
  s.round_labels.clear();
  json tasks = json::array();
  for (std::size_t i = 0; i < plan.requests.size(); ++i) {
    auto tid = s.queue->enqueue(plan.requests[i]);
    s.round_tasks.push_back(tid);
    tasks.push_back({{"task_id", tid},
                     {"dialogue_id", plan.selections[i].dialogue_id},
                     {"turn", plan.selections[i].turn},
                     {"turn_count", plan.selections[i].turn_count}});
  }
  persist(s);
  return json_response(201, {{"session", s.id}, {"round", plan.round}, {"tasks", tasks}});
}

HttpResponse AnnotationService::cancel_round(Session& s) {
  std::lock_guard lock(s.mutex);
  if (!s.learner->round_open()) throw ConflictError("session " + s.id + " has no open round");
  std::size_t round = s.learner->open_plan().round;
  auto dropped = s.queue->cancel_pending();
  s.learner->cancel_round();
  std::size_t discarded = s.round_labels.size();
  s.round_tasks.clear();
  s.round_labels.clear();
  persist(s);
  return json_response(200, {{"session", s.id},
                             {"round", round},
                             {"cancelled_tasks", dropped.size()},
                             {"discarded_labels", discarded}});
}

json AnnotationService::task_payload(const Session& s, const PendingTask& task) const {
  const auto& dialogue = corpus_.find(task.request.dialogue_id);
  json turns = json::array();
  for (const auto& turn : task.request.history_turns) {
    turns.push_back({{"index", turn.index}, {"system", turn.system_utterance}, {"user", turn.user_utterance}});
  }
  json out = {{"task_id", task.id},
              {"session", session_of_task(task.id)},
              {"dialogue_id", task.request.dialogue_id},
              {"turn", task.request.turn_index},
              {"turn_count", dialogue.turn_count()},
              {"turns", turns},
              {"slots", slot_forms(corpus_.ontology())}};
  if (task.claimed_by) {
    out["claimed_by"] = *task.claimed_by;
    out["claim_expires_ms"] = task.claimed_at_ms + options_.claim_timeout_ms;
  }
  if (options_.suggest_labels) {
    out["suggestion"] = s.scorer->predict(build_history(dialogue, task.request.turn_index)).argmax_state.to_json();
  }
  return out;
}

HttpResponse AnnotationService::claim_tasks(Session& s, const HttpRequest& request) {
  std::string annotator = "anonymous";
  if (auto it = request.query.find("annotator"); it != request.query.end() && !it->second.empty()) {
    annotator = it->second;
  }
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  if (auto it = request.query.find("limit"); it != request.query.end()) {
    try {
      std::size_t used = 0;
      limit = std::stoul(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("limit must be a non-negative integer, got '" + it->second + "'");
    }
  }
  std::lock_guard lock(s.mutex);
  json tasks = json::array();
  for (const auto& task : s.queue->claim(annotator, limit)) tasks.push_back(task_payload(s, task));
  json out = {{"session", s.id}, {"annotator", annotator}, {"tasks", tasks}};
  out["round"] = s.learner->round_open() ? json(s.learner->open_plan().round) : json(nullptr);
  return json_response(200, out);
}

HttpResponse AnnotationService::metrics(Session& s) {
  std::lock_guard lock(s.mutex);
  const auto& pool = s.learner->pool();
  json out = {{"session", s.id},
              {"rounds_completed", s.learner->rounds_completed()},
              {"rounds_total", s.config.rounds},
              {"round_open", s.learner->round_open()},
              {"retraining", s.retraining.load()},
              {"labelled", pool.labelled.size()},
              {"unlabelled", pool.unlabelled.size()},
              {"pending", s.queue->pending_count()},
              {"reading_cost", reading_cost_json(s.learner->current_reading_cost())}};
  out["last_eval"] = s.history.empty() ? json(nullptr) : s.history.back().value("eval", json(nullptr));
  out["history"] = s.history;
  return json_response(200, out);
}

HttpResponse AnnotationService::export_labels(Session& s) {
  std::lock_guard lock(s.mutex);
  std::string body;
  for (const auto& record : s.learner->pool().labelled) body += record.to_json().dump() + "\n";
  return HttpResponse{200, "application/x-ndjson", std::move(body)};
}

HttpResponse AnnotationService::snapshot(Session& s) {
  std::lock_guard lock(s.mutex);
  return json_response(200, s.scorer->snapshot());
}

HttpResponse AnnotationService::get_task(const std::string& task_id) {
  auto s = session(session_of_task(task_id));
  std::lock_guard lock(s->mutex);
  if (auto task = s->queue->find_pending(task_id)) return json_response(200, task_payload(*s, *task));
  if (s->queue->is_resolved(task_id)) throw ConflictError("task " + task_id + " was already labelled");
  throw NotFoundError("unknown task " + task_id);
}

HttpResponse AnnotationService::submit_label(const std::string& task_id, const HttpRequest& request) {
  auto s = session(session_of_task(task_id));
  json body = json::parse(request.body);
  if (!body.is_object() || !body.contains("state")) throw ParseError("label body must be {\"state\": ...}");
  DialogueState state = DialogueState::from_json(body.at("state"));

  std::lock_guard lock(s->mutex);
  LabelRecord record = s->queue->submit(task_id, state);
  if (s->log) s->log->append(record);
  s->round_labels.emplace(task_id, record);
  const std::size_t round = s->learner->open_plan().round;
  bool finalized = false;
  if (s->round_labels.size() == s->round_tasks.size()) {
    finalize_round(*s);
    finalized = true;
  } else {
    persist(*s);
  }
  return json_response(200, {{"task_id", task_id},
                             {"record", record.to_json()},
                             {"round", round},
                             {"round_finalized", finalized},
                             {"labelled", s->learner->pool().labelled.size()}});
}

void AnnotationService::finalize_round(Session& s) {
  s.retraining = true;
  struct Reset {
    std::atomic<bool>& flag;
    ~Reset() { flag = false; }
  } reset{s.retraining};

  std::vector<LabelRecord> labels;
  for (const auto& tid : s.round_tasks) labels.push_back(s.round_labels.at(tid));
  IterationRecord record = s.learner->commit_round(std::move(labels));
  if (!test_.empty()) record.eval.test = evaluate(*s.scorer, corpus_, test_, EvalScope::all_turns);
  if (!validation_.empty()) {
    record.eval.validation = evaluate(*s.scorer, corpus_, validation_, EvalScope::last_turn);
  }
  s.history.push_back(record.to_json());
  s.round_tasks.clear();
  s.round_labels.clear();
  persist(s);
}

// --------------------------------------------------------------- persistence

void AnnotationService::persist(const Session& s) const {
  if (options_.persist_dir.empty()) return;
  const auto dir = options_.persist_dir / s.id;
  std::filesystem::create_directories(dir);

  json labelled = json::array();
  for (const auto& r : s.learner->pool().labelled) labelled.push_back(r.to_json());
  json doc = {{"id", s.id},
              {"config", s.config.to_json()},
              {"scorer", s.params.to_json()},
              {"rounds_completed", s.learner->rounds_completed()},
              {"labelled", labelled},
              {"history", s.history},
              {"next_task", s.queue->next_id()},
              {"open_round", nullptr}};
  if (s.learner->round_open()) {
    const auto& plan = s.learner->open_plan();
    json tasks = json::array();
    for (std::size_t i = 0; i < s.round_tasks.size(); ++i) {
      json t = {{"id", s.round_tasks[i]},
                {"dialogue_id", plan.selections[i].dialogue_id},
                {"turn", plan.selections[i].turn}};
      if (auto it = s.round_labels.find(s.round_tasks[i]); it != s.round_labels.end()) {
        t["label"] = it->second.to_json();
      }
      tasks.push_back(std::move(t));
    }
    doc["open_round"] = {{"round", plan.round}, {"sampled", plan.sampled}, {"tasks", tasks}};
  }
  write_atomically(dir / "session.json", doc.dump(2) + "\n");
}

void AnnotationService::resume_sessions() {
  const auto& root = options_.persist_dir;
  if (!std::filesystem::exists(root)) {
    std::filesystem::create_directories(root);
    return;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    auto file = entry.path() / "session.json";
    if (entry.is_directory() && std::filesystem::exists(file)) files.push_back(file);
  }
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError("cannot resume " + file.string() + ": " + e.what());
    }
    auto s = std::make_shared<Session>();
    try {
      s->id = doc.at("id").get<std::string>();
      s->config = ALConfig::from_json(doc.at("config"));
      s->params = LexicalScorerParams::from_json(doc.at("scorer"));
      s->history = doc.value("history", json::array());
      std::vector<LabelRecord> labelled;
      for (const auto& r : doc.at("labelled")) labelled.push_back(LabelRecord::from_json(r));

      s->scorer = std::make_unique<LexicalScorer>(corpus_.ontology(), s->params);
      s->learner = std::make_unique<ActiveLearner>(corpus_, s->config, *s->scorer, pool_);
      s->learner->restore(doc.at("rounds_completed").get<std::size_t>(), std::move(labelled));
      s->queue = std::make_unique<HumanLabelQueue>(corpus_.ontology(), s->id + ".t", options_.claim_timeout_ms,
                                                   options_.clock);
      s->queue->advance_next_id(doc.value("next_task", std::size_t{1}));

      const auto& open = doc.at("open_round");
      if (!open.is_null()) {
        // Reopening is deterministic given the restored L and the round seed.
        const auto& plan = s->learner->open_round();
        if (plan.round != open.at("round").get<std::size_t>() ||
            plan.sampled != open.at("sampled").get<std::vector<std::string>>() ||
            plan.selections.size() != open.at("tasks").size()) {
          throw ConflictError("persisted open round does not match the replayed plan");
        }
        for (std::size_t i = 0; i < plan.selections.size(); ++i) {
          const auto& t = open.at("tasks")[i];
          if (t.at("dialogue_id").get<std::string>() != plan.selections[i].dialogue_id ||
              t.at("turn").get<std::size_t>() != plan.selections[i].turn) {
            throw ConflictError("persisted task " + t.at("id").get<std::string>() + " does not match the replay");
          }
          auto tid = t.at("id").get<std::string>();
          s->round_tasks.push_back(tid);
          if (t.contains("label")) {
            auto record = LabelRecord::from_json(t.at("label"));
            s->queue->restore_resolved(tid, record);
            s->round_labels.emplace(tid, std::move(record));
          } else {
            s->queue->restore_pending(tid, plan.requests[i]);
          }
        }
      }
    } catch (const json::exception& e) {
      throw ParseError("cannot resume " + file.string() + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError("cannot resume " + file.string() + ": " + e.what());
    }
    s->log = std::make_unique<LabelLog>(file.parent_path() / "labels.jsonl");

    std::size_t number = 0;
    if (s->id.size() > 1 && s->id[0] == 's') {
      try {
        number = std::stoul(s->id.substr(1));
      } catch (const std::exception&) {
      }
    }
    std::lock_guard lock(sessions_mutex_);
    next_session_ = std::max(next_session_, number + 1);
    sessions_.emplace(s->id, s);
  }
}

}  // namespace dstal
