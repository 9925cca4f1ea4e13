#include "dstal/al_loop.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "dstal/errors.hpp"
#include "dstal/random.hpp"

namespace dstal {

// ---------------------------------------------------------------- config

void ALConfig::validate() const {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (rounds < 1) throw ValidationError("rounds must be at least 1");
  if (start == StartMode::warm && initial_labels.empty()) {
    throw ValidationError("warm start requires a non-empty initial labelled pool");
  }
}

json ALConfig::to_json() const {
  json initial = json::array();
  for (const auto& r : initial_labels) initial.push_back(r.to_json());
  return {{"k", k},
          {"rounds", rounds},
          {"strategy", std::string(to_string(strategy.kind))},
          {"seed", master_seed},
          {"start", start == StartMode::warm ? "warm" : "cold"},
          {"initial_labels", std::move(initial)}};
}

ALConfig ALConfig::from_json(const json& j) {
  ALConfig c;
  try {
    c.k = j.value("k", c.k);
    c.rounds = j.value("rounds", c.rounds);
    c.strategy.kind = parse_strategy(j.value("strategy", std::string("me")));
    c.master_seed = j.value("seed", std::uint64_t{0});
    auto start = j.value("start", std::string("cold"));
    if (start != "cold" && start != "warm") throw ValidationError("start must be \"cold\" or \"warm\"");
    c.start = start == "warm" ? StartMode::warm : StartMode::cold;
    if (j.contains("initial_labels")) {
      for (const auto& r : j.at("initial_labels")) c.initial_labels.push_back(LabelRecord::from_json(r));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed AL config: ") + e.what());
  }
  c.validate();
  return c;
}

// --------------------------------------------------------------- records

namespace {

json selections_json(const std::vector<TurnChoice>& selections) {
  json out = json::array();
  for (const auto& s : selections) out.push_back({{"dialogue_id", s.dialogue_id}, {"turn", s.turn}, {"turns", s.turn_count}});
  return out;
}

json eval_json(const RoundEval& eval) {
  json out = json::object();
  if (eval.test) out["test"] = eval.test->to_json();
  if (eval.validation) out["validation"] = eval.validation->to_json();
  return out;
}

}  // namespace

json IterationRecord::to_json() const {
  json labels_json = json::array();
  for (const auto& l : labels) labels_json.push_back(l.to_json());
  return {{"round", round},
          {"sampled", sampled},
          {"selections", selections_json(selections)},
          {"labels", std::move(labels_json)},
          {"labelled_total", labelled_total},
          {"reading_cost", {{"mean", reading_cost.mean}, {"stddev", reading_cost.stddev}, {"n", reading_cost.n}}},
          {"eval", eval_json(eval)}};
}

json ALRun::to_json() const {
  json rounds_json = json::array();
  for (const auto& r : rounds) rounds_json.push_back(r.to_json());
  json labelled_json = json::array();
  for (const auto& l : labelled) labelled_json.push_back(l.to_json());
  return {{"rounds", std::move(rounds_json)}, {"labelled", std::move(labelled_json)}, {"unlabelled", unlabelled}};
}

void ALRun::write_csv(std::ostream& out) const {
  out << "round,labelled,jga,sa,rc\n";
  for (const auto& r : rounds) {
    out << r.round << ',' << r.labelled_total << ',';
    if (r.eval.test) {
      out << format_number(r.eval.test->jga) << ',' << format_number(r.eval.test->slot_accuracy);
    } else {
      out << ',';
    }
    out << ',' << format_number(r.reading_cost.percent()) << '\n';
  }
}

std::string ALRun::csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

// ---------------------------------------------------------------- helpers

std::vector<TurnSelection> selections_of(const Corpus& corpus, std::span<const LabelRecord> labelled) {
  std::map<std::string, std::size_t> latest;
  std::vector<std::string> order;
  for (const auto& r : labelled) {
    auto [it, inserted] = latest.emplace(r.dialogue_id, r.turn_index);
    if (inserted) {
      order.push_back(r.dialogue_id);
    } else {
      it->second = std::max(it->second, r.turn_index);
    }
  }
  std::vector<TurnSelection> out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(TurnSelection{latest[id], corpus.find(id).turn_count()});
  return out;
}

std::vector<TrainingInstance> instances_from_labels(const Corpus& corpus, std::span<const LabelRecord> labels) {
  std::vector<TrainingInstance> out;
  out.reserve(labels.size());
  for (const auto& r : labels) out.push_back(make_instance(corpus.find(r.dialogue_id), r.turn_index, r.state));
  return out;
}

namespace {

std::vector<std::string> ids_of(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(corpus.at(i).id);
  return out;
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> pool, const Corpus& corpus) {
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  for (auto i : pool) {
    if (i >= corpus.size()) throw RangeError("pool index out of range");
  }
  return pool;
}

// Draws this round's dialogues from U; the same (seed, round) always
// yields the same positions.
std::vector<std::size_t> sample_round(std::uint64_t master_seed, std::size_t round, std::size_t available,
                                      std::size_t k) {
  Rng rng(derive_seed(master_seed, round));
  auto picks = sample_without_replacement(rng, available, std::min(k, available));
  return picks;
}

}  // namespace

// --------------------------------------------------------------- learner

ActiveLearner::ActiveLearner(const Corpus& corpus, ALConfig config, Scorer& scorer, std::vector<std::size_t> pool)
    : corpus_(corpus), config_(std::move(config)), scorer_(scorer) {
  config_.validate();
  initial_pool_ = sorted_unique(std::move(pool), corpus_);
  if (initial_pool_.empty()) throw ValidationError("the unlabelled pool is empty");
  pool_.unlabelled = ids_of(corpus_, initial_pool_);

  scorer_.reinitialize();
  if (config_.start == StartMode::warm) {
    std::set<std::string> seen;
    for (const auto& r : config_.initial_labels) {
      auto pos = std::find(pool_.unlabelled.begin(), pool_.unlabelled.end(), r.dialogue_id);
      if (pos == pool_.unlabelled.end()) {
        throw ValidationError("initial label for " + r.dialogue_id + " is not in the unlabelled pool");
      }
      if (!seen.insert(r.dialogue_id).second) {
        throw ValidationError("initial labels contain two records for " + r.dialogue_id);
      }
      const auto& d = corpus_.find(r.dialogue_id);
      if (r.turn_index < 1 || r.turn_index > d.turn_count()) throw RangeError("initial label turn out of range");
      validate_state(corpus_.ontology(), r.state);
      pool_.unlabelled.erase(pos);
      pool_.labelled.push_back(r);
    }
    retrain();
  }
}

const RoundPlan& ActiveLearner::open_plan() const {
  if (!open_) throw ConflictError("no round is open");
  return *open_;
}

bool ActiveLearner::finished() const {
  return rounds_completed_ >= config_.rounds || pool_.unlabelled.empty();
}

const RoundPlan& ActiveLearner::open_round() {
  if (open_) throw ConflictError("round " + std::to_string(open_->round) + " is still open");
  if (rounds_completed_ >= config_.rounds) throw ConflictError("all " + std::to_string(config_.rounds) + " rounds are done");
  if (pool_.unlabelled.empty()) throw ConflictError("the unlabelled pool is exhausted");

  RoundPlan plan;
  plan.round = rounds_completed_ + 1;
  auto picks = sample_round(config_.master_seed, plan.round, pool_.unlabelled.size(), config_.k);
  for (auto p : picks) plan.sampled.push_back(pool_.unlabelled[p]);

  for (const auto& id : plan.sampled) {
    const auto& d = corpus_.find(id);
    Strategy strategy = config_.strategy;
    strategy.rng_seed = derive_seed(config_.master_seed, plan.round, fnv1a(id));
    std::size_t t = select_turn(d, scorer_, strategy);
    plan.selections.push_back(TurnChoice{id, t, d.turn_count()});
    plan.requests.push_back(make_label_request(d, t));
  }

  std::set<std::string> taken(plan.sampled.begin(), plan.sampled.end());
  std::erase_if(pool_.unlabelled, [&](const std::string& id) { return taken.count(id) != 0; });
  open_ = std::move(plan);
  return *open_;
}

IterationRecord ActiveLearner::commit_round(std::vector<LabelRecord> labels) {
  if (!open_) throw ConflictError("no round is open");
  const auto& plan = *open_;
  if (labels.size() != plan.selections.size()) {
    throw ValidationError("round " + std::to_string(plan.round) + " expects " +
                          std::to_string(plan.selections.size()) + " labels, got " + std::to_string(labels.size()));
  }
  std::map<std::string, LabelRecord*> by_id;
  for (auto& l : labels) {
    if (!by_id.emplace(l.dialogue_id, &l).second) throw ValidationError("duplicate label for " + l.dialogue_id);
    validate_state(corpus_.ontology(), l.state);
  }
  std::vector<LabelRecord> ordered;
  ordered.reserve(labels.size());
  for (const auto& s : plan.selections) {
    auto it = by_id.find(s.dialogue_id);
    if (it == by_id.end()) throw ValidationError("missing label for " + s.dialogue_id);
    if (it->second->turn_index != s.turn) {
      throw ValidationError("label for " + s.dialogue_id + " is for turn " + std::to_string(it->second->turn_index) +
                            ", selected turn is " + std::to_string(s.turn));
    }
    ordered.push_back(std::move(*it->second));
  }

  IterationRecord record;
  record.round = plan.round;
  record.sampled = plan.sampled;
  record.selections = plan.selections;
  record.labels = ordered;
  pool_.labelled.insert(pool_.labelled.end(), ordered.begin(), ordered.end());
  open_.reset();
  ++rounds_completed_;
  retrain();
  record.labelled_total = pool_.labelled.size();
  record.reading_cost = current_reading_cost();
  return record;
}

std::size_t ActiveLearner::position_of(const std::string& id) const {
  return *corpus_.index_of(id);
}

void ActiveLearner::cancel_round() {
  if (!open_) throw ConflictError("no round is open");
  for (const auto& id : open_->sampled) pool_.unlabelled.push_back(id);
  std::sort(pool_.unlabelled.begin(), pool_.unlabelled.end(),
            [&](const std::string& a, const std::string& b) { return position_of(a) < position_of(b); });
  open_.reset();
}

std::vector<TrainingInstance> ActiveLearner::training_set() const {
  return instances_from_labels(corpus_, pool_.labelled);
}

std::vector<TurnSelection> ActiveLearner::selections() const { return selections_of(corpus_, pool_.labelled); }

ReadingCost ActiveLearner::current_reading_cost() const {
  auto sel = selections();
  if (sel.empty()) return {};
  return reading_cost(sel);
}

void ActiveLearner::restore(std::size_t rounds_completed, std::vector<LabelRecord> labelled) {
  if (open_) throw ConflictError("cannot restore while a round is open");
  std::set<std::string> ids;
  for (const auto& r : labelled) {
    if (!ids.insert(r.dialogue_id).second) throw ValidationError("restored pool labels " + r.dialogue_id + " twice");
  }
  auto all = ids_of(corpus_, initial_pool_);
  for (const auto& id : ids) {
    if (std::find(all.begin(), all.end(), id) == all.end()) {
      throw ValidationError("restored label for " + id + " is outside the pool");
    }
  }
  std::erase_if(all, [&](const std::string& id) { return ids.count(id) != 0; });
  pool_.unlabelled = std::move(all);
  pool_.labelled = std::move(labelled);
  rounds_completed_ = rounds_completed;
  retrain();
}

void ActiveLearner::retrain() {
  auto instances = training_set();
  scorer_.reinitialize();
  scorer_.train(instances);
}

// ------------------------------------------------------------------ runs

ALRun run_al(const ALConfig& config, const Corpus& corpus, std::vector<std::size_t> pool, Scorer& scorer,
             Oracle& oracle, const EvalFn& eval) {
  ActiveLearner learner(corpus, config, scorer, std::move(pool));
  ALRun run;
  while (!learner.finished()) {
    const auto& plan = learner.open_round();
    std::vector<LabelRecord> labels;
    try {
      labels = oracle.label_batch(plan.requests);
    } catch (const Error& e) {
      learner.cancel_round();
      throw OracleError(std::string("round cancelled: ") + e.what());
    }
    auto record = learner.commit_round(std::move(labels));
    if (eval) record.eval = eval(scorer, record.round);
    run.rounds.push_back(std::move(record));
  }
  run.labelled = learner.pool().labelled;
  run.unlabelled = learner.pool().unlabelled;
  return run;
}

ALRun run_al(const ALConfig& config, const Corpus& corpus, Scorer& scorer, Oracle& oracle, const EvalFn& eval) {
  return run_al(config, corpus, corpus.split_indices("train"), scorer, oracle, eval);
}

ALRun dialogue_level_random_baseline(const ALConfig& config, const Corpus& corpus, std::vector<std::size_t> pool,
                                     Oracle& oracle) {
  config.validate();
  auto indices = sorted_unique(std::move(pool), corpus);
  if (indices.empty()) throw ValidationError("the unlabelled pool is empty");
  auto unlabelled = ids_of(corpus, indices);

  ALRun run;
  for (std::size_t round = 1; round <= config.rounds && !unlabelled.empty(); ++round) {
    IterationRecord record;
    record.round = round;
    auto picks = sample_round(config.master_seed, round, unlabelled.size(), config.k);
    std::vector<LabelRequest> requests;
    for (auto p : picks) {
      const auto& d = corpus.find(unlabelled[p]);
      record.sampled.push_back(d.id);
      record.selections.push_back(TurnChoice{d.id, d.turn_count(), d.turn_count()});
      for (std::size_t t = 1; t <= d.turn_count(); ++t) requests.push_back(make_label_request(d, t));
    }
    try {
      record.labels = oracle.label_batch(requests);
    } catch (const Error& e) {
      throw OracleError(std::string("round cancelled: ") + e.what());
    }
    std::set<std::string> taken(record.sampled.begin(), record.sampled.end());
    std::erase_if(unlabelled, [&](const std::string& id) { return taken.count(id) != 0; });
    run.labelled.insert(run.labelled.end(), record.labels.begin(), record.labels.end());
    record.labelled_total = run.labelled.size();
    record.reading_cost = reading_cost(selections_of(corpus, run.labelled));
    run.rounds.push_back(std::move(record));
  }
  run.unlabelled = std::move(unlabelled);
  return run;
}

}  // namespace dstal
