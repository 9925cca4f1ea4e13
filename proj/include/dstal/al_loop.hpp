#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dstal/acquisition.hpp"
#include "dstal/corpus.hpp"
#include "dstal/metrics.hpp"
#include "dstal/oracle.hpp"
#include "dstal/scorer.hpp"

namespace dstal {

enum class StartMode { cold, warm };

struct ALConfig {
  std::size_t k = 1;       // dialogues queried per round
  std::size_t rounds = 1;  // R
  Strategy strategy;       // rng_seed is ignored; RS draws derive from master_seed
  std::uint64_t master_seed = 0;
  StartMode start = StartMode::cold;
  std::vector<LabelRecord> initial_labels;  // warm start only

  void validate() const;
  json to_json() const;
  static ALConfig from_json(const json& j);
};

struct PoolState {
  std::vector<std::string> unlabelled;  // U, in corpus order
  std::vector<LabelRecord> labelled;    // L, one record per dialogue
};

struct TurnChoice {
  std::string dialogue_id;
  std::size_t turn = 1;
  std::size_t turn_count = 1;
};

struct RoundPlan {
  std::size_t round = 0;
  std::vector<std::string> sampled;     // U_r
  std::vector<TurnChoice> selections;   // X_r, aligned with sampled
  std::vector<LabelRequest> requests;   // aligned with selections
};

struct RoundEval {
  std::optional<EvalResult> test;
  std::optional<EvalResult> validation;  // last turns only
};

struct IterationRecord {
  std::size_t round = 0;
  std::vector<std::string> sampled;
  std::vector<TurnChoice> selections;
  std::vector<LabelRecord> labels;  // L_r
  std::size_t labelled_total = 0;   // |L| after the round
  ReadingCost reading_cost;         // over all of L after the round
  RoundEval eval;

  json to_json() const;
};

struct ALRun {
  std::vector<IterationRecord> rounds;
  std::vector<LabelRecord> labelled;
  std::vector<std::string> unlabelled;

  json to_json() const;
  // round,labelled,jga,sa,rc (jga/sa empty when a round was not evaluated)
  void write_csv(std::ostream& out) const;
  std::string csv() const;
};

using EvalFn = std::function<RoundEval(const Scorer& scorer, std::size_t round)>;

// The pool-based active-learning loop as a resumable state machine: open a round, collect its
// labels however they arrive, then commit (retrain) or cancel.
class ActiveLearner {
 public:
  // `pool` holds corpus indices of the unlabelled dialogues. Warm start
  // trains the scorer on config.initial_labels before round 1.
  ActiveLearner(const Corpus& corpus, ALConfig config, Scorer& scorer, std::vector<std::size_t> pool);

  const ALConfig& config() const { return config_; }
  const PoolState& pool() const { return pool_; }
  const Corpus& corpus() const { return corpus_; }
  std::size_t rounds_completed() const { return rounds_completed_; }
  bool round_open() const { return open_.has_value(); }
  const RoundPlan& open_plan() const;
  // R rounds done or nothing left to sample.
  bool finished() const;

  // Samples min(k, |U|) dialogues and selects one turn in each with the
  // current scorer. Sampled dialogues are held out of U until commit/cancel.
  const RoundPlan& open_round();

  // Labels must cover the open round's selections exactly (any order).
  // Moves them into L, then re-initializes and re-trains the scorer on L.
  IterationRecord commit_round(std::vector<LabelRecord> labels);

  // Returns the round's dialogues to U.
  void cancel_round();

  std::vector<TrainingInstance> training_set() const;
  std::vector<TurnSelection> selections() const;
  ReadingCost current_reading_cost() const;

  // Restores a persisted pool without retraining callbacks; used when a
  // service resumes. The scorer is retrained on `labelled`.
  void restore(std::size_t rounds_completed, std::vector<LabelRecord> labelled);

 private:
  void retrain();
  std::size_t position_of(const std::string& id) const;

  const Corpus& corpus_;
  ALConfig config_;
  Scorer& scorer_;
  PoolState pool_;
  std::vector<std::size_t> initial_pool_;
  std::size_t rounds_completed_ = 0;
  std::optional<RoundPlan> open_;
};

// Runs R rounds against `oracle`. An oracle failure cancels the round,
// restores the pools, and propagates as OracleError.
ALRun run_al(const ALConfig& config, const Corpus& corpus, std::vector<std::size_t> pool, Scorer& scorer,
             Oracle& oracle, const EvalFn& eval = {});
// Pool = the corpus's "train" split.
ALRun run_al(const ALConfig& config, const Corpus& corpus, Scorer& scorer, Oracle& oracle,
             const EvalFn& eval = {});

// Dialogue-level comparator: each round samples k dialogues the same way
// and labels every turn of each. Scorer-free.
ALRun dialogue_level_random_baseline(const ALConfig& config, const Corpus& corpus, std::vector<std::size_t> pool,
                                     Oracle& oracle);

// One t/T entry per labelled dialogue (the latest labelled turn when a
// dialogue carries several records).
std::vector<TurnSelection> selections_of(const Corpus& corpus, std::span<const LabelRecord> labelled);

std::vector<TrainingInstance> instances_from_labels(const Corpus& corpus, std::span<const LabelRecord> labels);

}  // namespace dstal
