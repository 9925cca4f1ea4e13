#include "dstal/oracle.hpp"

#include <algorithm>

#include "dstal/errors.hpp"

namespace dstal {

LabelRequest make_label_request(const Dialogue& dialogue, std::size_t t) {
  if (t < 1 || t > dialogue.turn_count()) {
    throw RangeError("turn " + std::to_string(t) + " out of range for dialogue " + dialogue.id);
  }
  LabelRequest req;
  req.dialogue_id = dialogue.id;
  req.turn_index = t;
  req.history_turns.assign(dialogue.turns.begin(), dialogue.turns.begin() + static_cast<std::ptrdiff_t>(t));
  return req;
}

std::string_view to_string(LabelSource source) {
  return source == LabelSource::human ? "human" : "simulated";
}

json LabelRecord::to_json() const {
  return {{"dialogue_id", dialogue_id},
          {"turn", turn_index},
          {"state", state.to_json()},
          {"source", std::string(dstal::to_string(source))},
          {"timestamp_ms", timestamp_ms}};
}

LabelRecord LabelRecord::from_json(const json& j) {
  LabelRecord r;
  try {
    r.dialogue_id = j.at("dialogue_id").get<std::string>();
    r.turn_index = j.at("turn").get<std::size_t>();
    r.state = DialogueState::from_json(j.at("state"));
    auto source = j.value("source", std::string("simulated"));
    if (source != "simulated" && source != "human") throw ParseError("unknown label source '" + source + "'");
    r.source = source == "human" ? LabelSource::human : LabelSource::simulated;
    r.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed label record: ") + e.what());
  }
  return r;
}

std::vector<LabelRecord> Oracle::label_batch(std::span<const LabelRequest> requests) {
  std::vector<LabelRecord> out;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    try {
      out.push_back(label(req));
    } catch (const OracleError&) {
      throw;
    } catch (const Error& e) {
      throw OracleError("oracle could not label " + req.dialogue_id + " turn " +
                        std::to_string(req.turn_index) + ": " + e.what());
    }
  }
  return out;
}

LabelRecord SimulatedOracle::label(const LabelRequest& request) {
  const auto& dialogue = corpus_.find(request.dialogue_id);
  if (!dialogue.gold_states) {
    throw OracleError("dialogue " + dialogue.id + " has no gold states to simulate an annotator");
  }
  return LabelRecord{dialogue.id, request.turn_index, dialogue.gold(request.turn_index),
                     LabelSource::simulated, 0};
}

// ------------------------------------------------------------------- log

LabelLog::LabelLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error("cannot open label log " + path_.string());
}

void LabelLog::append(const LabelRecord& record) {
  std::lock_guard lock(mutex_);
  out_ << record.to_json().dump() << '\n';
  out_.flush();
}

std::vector<LabelRecord> LabelLog::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open label log " + path.string());
  std::vector<LabelRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(LabelRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError("label log line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
  return out;
}

// ----------------------------------------------------------------- queue

HumanLabelQueue::HumanLabelQueue(const Ontology& ontology, std::string id_prefix, std::int64_t claim_timeout_ms,
                                 Clock clock)
    : ontology_(ontology), prefix_(std::move(id_prefix)), claim_timeout_ms_(claim_timeout_ms),
      clock_(std::move(clock)) {
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
}

std::string HumanLabelQueue::enqueue(LabelRequest request) {
  if (request.history_turns.size() != request.turn_index || request.turn_index < 1) {
    throw ValidationError("label request must carry exactly turns 1..t");
  }
  std::lock_guard lock(mutex_);
  std::string id = prefix_ + std::to_string(next_id_++);
  pending_.emplace(id, PendingTask{id, std::move(request), std::nullopt, 0});
  return id;
}

namespace {

std::size_t counter_of(const std::string& id, const std::string& prefix) {
  if (id.compare(0, prefix.size(), prefix) != 0) return 0;
  try {
    return static_cast<std::size_t>(std::stoull(id.substr(prefix.size())));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

void HumanLabelQueue::restore_pending(const std::string& id, LabelRequest request) {
  std::lock_guard lock(mutex_);
  if (pending_.count(id) || resolved_by_id_.count(id)) throw ConflictError("task " + id + " already exists");
  next_id_ = std::max(next_id_, counter_of(id, prefix_) + 1);
  pending_.emplace(id, PendingTask{id, std::move(request), std::nullopt, 0});
}

void HumanLabelQueue::restore_resolved(const std::string& id, LabelRecord record) {
  std::lock_guard lock(mutex_);
  if (pending_.count(id) || resolved_by_id_.count(id)) throw ConflictError("task " + id + " already exists");
  next_id_ = std::max(next_id_, counter_of(id, prefix_) + 1);
  resolved_by_id_.emplace(id, record);
  resolved_.push_back(std::move(record));
}

std::size_t HumanLabelQueue::next_id() const {
  std::lock_guard lock(mutex_);
  return next_id_;
}

void HumanLabelQueue::advance_next_id(std::size_t next) {
  std::lock_guard lock(mutex_);
  next_id_ = std::max(next_id_, next);
}

LabelRecord HumanLabelQueue::submit(const std::string& id, const DialogueState& state) {
  validate_state(ontology_, state);
  LabelRecord record;
  {
    std::lock_guard lock(mutex_);
    if (resolved_by_id_.count(id)) throw ConflictError("task " + id + " was already labelled");
    auto it = pending_.find(id);
    if (it == pending_.end()) throw NotFoundError("unknown task " + id);
    record = LabelRecord{it->second.request.dialogue_id, it->second.request.turn_index, state,
                         LabelSource::human, clock_()};
    pending_.erase(it);
    resolved_by_id_.emplace(id, record);
    resolved_.push_back(record);
  }
  cv_.notify_all();
  return record;
}

std::vector<PendingTask> HumanLabelQueue::claim(const std::string& annotator, std::size_t limit) {
  std::lock_guard lock(mutex_);
  std::int64_t now = clock_();
  std::vector<PendingTask> out;
  for (auto& [id, task] : pending_) {
    if (out.size() >= limit) break;
    bool free = !task.claimed_by || *task.claimed_by == annotator ||
                now - task.claimed_at_ms >= claim_timeout_ms_;
    if (!free) continue;
    task.claimed_by = annotator;
    task.claimed_at_ms = now;
    out.push_back(task);
  }
  return out;
}

std::vector<PendingTask> HumanLabelQueue::pending() const {
  std::lock_guard lock(mutex_);
  std::vector<PendingTask> out;
  for (const auto& [id, task] : pending_) out.push_back(task);
  return out;
}

std::optional<PendingTask> HumanLabelQueue::find_pending(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = pending_.find(id);
  if (it == pending_.end()) return std::nullopt;
  return it->second;
}

bool HumanLabelQueue::is_resolved(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return resolved_by_id_.count(id) != 0;
}

std::size_t HumanLabelQueue::pending_count() const {
  std::lock_guard lock(mutex_);
  return pending_.size();
}

std::vector<PendingTask> HumanLabelQueue::cancel_pending() {
  std::vector<PendingTask> out;
  {
    std::lock_guard lock(mutex_);
    for (auto& [id, task] : pending_) out.push_back(std::move(task));
    pending_.clear();
  }
  cv_.notify_all();
  return out;
}

bool HumanLabelQueue::wait_all(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [this] { return pending_.empty(); });
}

std::vector<LabelRecord> HumanLabelQueue::resolved() const {
  std::lock_guard lock(mutex_);
  return resolved_;
}

std::optional<LabelRecord> HumanLabelQueue::record(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = resolved_by_id_.find(id);
  if (it == resolved_by_id_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------- human oracle

LabelRecord QueuedHumanOracle::label(const LabelRequest& request) {
  auto records = label_batch(std::span<const LabelRequest>(&request, 1));
  return records.front();
}

std::vector<LabelRecord> QueuedHumanOracle::label_batch(std::span<const LabelRequest> requests) {
  std::vector<std::string> ids;
  ids.reserve(requests.size());
  for (const auto& req : requests) ids.push_back(queue_.enqueue(req));
  if (!queue_.wait_all(timeout_)) {
    queue_.cancel_pending();
    throw OracleError("timed out waiting for human labels");
  }
  std::vector<LabelRecord> out;
  for (const auto& id : ids) {
    auto rec = queue_.record(id);
    if (!rec) throw OracleError("task " + id + " was cancelled before it was labelled");
    out.push_back(std::move(*rec));
  }
  return out;
}

}  // namespace dstal
