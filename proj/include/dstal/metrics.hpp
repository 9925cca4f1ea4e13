#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dstal/corpus.hpp"
#include "dstal/scorer.hpp"

namespace dstal {

struct EvalResult {
  double jga = 0.0;            // fraction of turns whose whole state is right
  double slot_accuracy = 0.0;  // fraction of (slot, turn) cells right, "none" included
  std::size_t n_turns = 0;

  json to_json() const;
};

// Both throw RangeError on empty input and ValidationError on length mismatch.
double joint_goal_accuracy(std::span<const DialogueState> predicted, std::span<const DialogueState> gold);
double slot_accuracy(std::span<const DialogueState> predicted, std::span<const DialogueState> gold,
                     const Ontology& ontology);

double joint_goal_accuracy(std::span<const Prediction> predictions, std::span<const DialogueState> gold);
double slot_accuracy(std::span<const Prediction> predictions, std::span<const DialogueState> gold,
                     const Ontology& ontology);

EvalResult evaluate_states(std::span<const DialogueState> predicted, std::span<const DialogueState> gold,
                           const Ontology& ontology);

enum class EvalScope { all_turns, last_turn };

// Predicts every turn (or only the last one) of the given dialogues.
EvalResult evaluate(const Scorer& scorer, const Corpus& corpus, std::span<const std::size_t> dialogues,
                    EvalScope scope = EvalScope::all_turns);

struct TurnSelection {
  std::size_t turn = 1;        // t
  std::size_t turn_count = 1;  // T of the dialogue
};

struct ReadingCost {
  double mean = 0.0;    // fraction in (0, 1]
  double stddev = 0.0;  // population standard deviation of t/T
  std::size_t n = 0;

  double percent() const { return 100.0 * mean; }
  double stddev_percent() const { return 100.0 * stddev; }
};

// Mean of t / T over labelled dialogues.
ReadingCost reading_cost(std::span<const TurnSelection> selections);

struct CostParams {
  double read_minutes = 0.0;      // x, per turn read
  double annotate_minutes = 0.0;  // y, per turn labelled
  double dollars_per_minute = 0.0;  // z
  std::size_t turn_count = 1;     // T
  std::size_t selected_turn = 1;  // t
};

enum class CostMethod { full_dialogue, last_turn, selected_turn };
std::string_view to_string(CostMethod method);

// full: z(Tx + Ty); last: z(Tx + y); selected: z(tx + y).
double annotation_cost(const CostParams& params, CostMethod method);

// CSV rows "metric,value,stddev,n" with a header.
struct MetricRow {
  std::string metric;
  double value = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};
void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows);

// Fixed six-decimal formatting used by every CSV writer.
std::string format_number(double value);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population
};
MeanStd mean_std(std::span<const double> values);

}  // namespace dstal
