#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dstal/corpus.hpp"

namespace dstal {

// What an annotator must read to label turn t: turns 1..t, nothing later.
struct LabelRequest {
  std::string dialogue_id;
  std::size_t turn_index = 1;
  std::vector<Turn> history_turns;
};

LabelRequest make_label_request(const Dialogue& dialogue, std::size_t t);

enum class LabelSource { simulated, human };
std::string_view to_string(LabelSource source);

struct LabelRecord {
  std::string dialogue_id;
  std::size_t turn_index = 1;
  DialogueState state;
  LabelSource source = LabelSource::simulated;
  std::int64_t timestamp_ms = 0;  // 0 for simulated labels

  json to_json() const;
  static LabelRecord from_json(const json& j);
  bool operator==(const LabelRecord&) const = default;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual LabelRecord label(const LabelRequest& request) = 0;
  // All-or-nothing: throws OracleError if any label cannot be obtained.
  virtual std::vector<LabelRecord> label_batch(std::span<const LabelRequest> requests);
};

// Answers with the gold state of the requested turn.
class SimulatedOracle final : public Oracle {
 public:
  explicit SimulatedOracle(const Corpus& corpus) : corpus_(corpus) {}
  LabelRecord label(const LabelRequest& request) override;

 private:
  const Corpus& corpus_;
};

// Append-only JSON Lines log, flushed after every record.
class LabelLog {
 public:
  explicit LabelLog(std::filesystem::path path);
  void append(const LabelRecord& record);
  const std::filesystem::path& path() const { return path_; }

  static std::vector<LabelRecord> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

struct PendingTask {
  std::string id;
  LabelRequest request;
  std::optional<std::string> claimed_by;
  std::int64_t claimed_at_ms = 0;
};

// Human oracle backing store. Every operation is linearizable; a pending
// id resolves exactly once.
class HumanLabelQueue {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit HumanLabelQueue(const Ontology& ontology, std::string id_prefix = "task-",
                           std::int64_t claim_timeout_ms = 10 * 60 * 1000, Clock clock = {});

  std::string enqueue(LabelRequest request);

  // Resume support: re-create a pending task or a resolved record under a
  // previously issued id. Later enqueue() ids continue past `id`'s counter.
  void restore_pending(const std::string& id, LabelRequest request);
  void restore_resolved(const std::string& id, LabelRecord record);
  std::size_t next_id() const;
  void advance_next_id(std::size_t next);  // never moves backwards

  // Throws NotFoundError (unknown id), ConflictError (already resolved),
  // ValidationError (value outside the ontology for a closed slot).
  LabelRecord submit(const std::string& id, const DialogueState& state);

  // Claim-on-read: hands out up to `limit` tasks that are unclaimed, whose
  // claim has expired, or that this annotator already holds.
  std::vector<PendingTask> claim(const std::string& annotator, std::size_t limit);

  std::vector<PendingTask> pending() const;
  std::optional<PendingTask> find_pending(const std::string& id) const;
  bool is_resolved(const std::string& id) const;
  std::size_t pending_count() const;

  // Drop every pending task; already-resolved records are kept.
  std::vector<PendingTask> cancel_pending();

  // Blocks until nothing is pending or the timeout expires.
  bool wait_all(std::chrono::milliseconds timeout);

  // Resolved records in resolution order.
  std::vector<LabelRecord> resolved() const;
  std::optional<LabelRecord> record(const std::string& id) const;

  std::int64_t now_ms() const { return clock_(); }

 private:
  const Ontology& ontology_;
  std::string prefix_;
  std::int64_t claim_timeout_ms_;
  Clock clock_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t next_id_ = 1;
  std::map<std::string, PendingTask> pending_;
  std::map<std::string, LabelRecord> resolved_by_id_;
  std::vector<LabelRecord> resolved_;
};

// Oracle adapter that enqueues a round's requests and waits for humans.
class QueuedHumanOracle final : public Oracle {
 public:
  QueuedHumanOracle(HumanLabelQueue& queue, std::chrono::milliseconds timeout)
      : queue_(queue), timeout_(timeout) {}

  LabelRecord label(const LabelRequest& request) override;
  std::vector<LabelRecord> label_batch(std::span<const LabelRequest> requests) override;

 private:
  HumanLabelQueue& queue_;
  std::chrono::milliseconds timeout_;
};

}  // namespace dstal
