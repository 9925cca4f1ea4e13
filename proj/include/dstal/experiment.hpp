#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dstal/al_loop.hpp"
#include "dstal/corpus.hpp"
#include "dstal/metrics.hpp"
#include "dstal/scorer.hpp"

namespace dstal {

// Parameters of the synthetic corpus generator.
//
// Every dialogue has T turns drawn uniformly from [min_turns, max_turns].
// The last `trailing_empty_turns` turns are politeness exchanges that add
// no state. Each earlier ("contentful") turn introduces between
// min_new_slots and max_new_slots new domain-slots, except that with
// probability `idle_turn_rate` a contentful turn after the first only asks
// a question and adds nothing. The last turn whose state changes is the
// dialogue's summary turn.
struct SyntheticSpec {
  std::size_t n_dialogues = 100;  // train split
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  std::size_t min_turns = 4;
  std::size_t max_turns = 8;
  std::size_t domains = 2;
  std::size_t slots_per_domain = 3;
  std::size_t values_per_slot = 4;
  std::size_t min_new_slots = 1;
  std::size_t max_new_slots = 2;
  std::size_t trailing_empty_turns = 0;
  double idle_turn_rate = 0.0;
  std::size_t max_domains_per_dialogue = 2;
  // Same-named slots in different domains share one value list, so a
  // mention alone does not identify the slot.
  bool shared_values = false;
  // Chance that the system turn repeats an already-set value.
  double system_echo_rate = 0.5;

  void validate() const;
  json to_json() const;
  static SyntheticSpec from_json(const json& j);
};

struct SyntheticCorpus {
  Corpus corpus;
  std::map<std::string, std::size_t> summary_turn;  // dialogue id -> turn
};

// Deterministic in (spec, seed). Throws ValidationError for unsatisfiable specs.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Canonical corpus JSON plus a per-dialogue "summary_turn" field.
json synthetic_to_json(const SyntheticCorpus& synthetic);

enum class Baseline { full_data, last_turn, dialogue_level_random, selected_turn };
std::string_view to_string(Baseline baseline);
Baseline parse_baseline(std::string_view name);

struct ExperimentSpec {
  std::optional<std::filesystem::path> corpus_path;
  std::optional<SyntheticSpec> synthetic;
  std::uint64_t synthetic_seed = 0;

  std::vector<Baseline> baselines;
  std::vector<std::size_t> k_values;          // AL baselines only
  std::optional<std::size_t> rounds;          // default: ceil(|U| / k)
  std::vector<StrategyKind> strategies;       // selected_turn only
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  LexicalScorerParams scorer;

  std::string train_split = "train";
  std::string validation_split = "validation";
  std::string test_split = "test";

  void validate() const;
  static ExperimentSpec from_json(const json& j);
};

struct CellResult {
  std::string name;  // e.g. "selected_turn_me_k100_seed3"
  Baseline baseline = Baseline::full_data;
  std::optional<StrategyKind> strategy;
  std::optional<std::size_t> k;
  std::uint64_t seed = 0;

  bool ok = false;
  std::string error;

  std::size_t train_instances = 0;
  std::optional<EvalResult> test;
  ReadingCost reading_cost;
  std::vector<std::pair<std::string, TurnSelection>> selections;  // per labelled dialogue
  std::string rounds_csv;  // round,labelled,jga,sa,rc
};

struct ExperimentReport {
  CorpusStats train_stats;
  std::vector<CellResult> cells;
  json summary;
};

// Runs every (baseline, k, strategy, seed) cell. A failing cell is
// recorded and the grid continues. Writes the report when
// spec.output_dir is non-empty:
//   cells/<name>.csv, summary.json, summary.csv, rc_distribution.csv
ExperimentReport run_experiment(const ExperimentSpec& spec);
ExperimentReport run_experiment(const ExperimentSpec& spec, const Corpus& corpus);

// Individual cells, exposed for tests and the `al` command.
CellResult run_cell(const Corpus& corpus, const ExperimentSpec& spec, Baseline baseline,
                    std::optional<StrategyKind> strategy, std::optional<std::size_t> k, std::uint64_t seed);

void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace dstal
