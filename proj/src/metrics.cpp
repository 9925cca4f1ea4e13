#include "dstal/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "dstal/errors.hpp"

namespace dstal {

json EvalResult::to_json() const { return {{"jga", jga}, {"slot_accuracy", slot_accuracy}, {"n_turns", n_turns}}; }

namespace {

void check_aligned(std::size_t predicted, std::size_t gold) {
  if (gold == 0) throw RangeError("metrics require at least one turn");
  if (predicted != gold) {
    throw ValidationError("predictions (" + std::to_string(predicted) + ") and gold states (" +
                          std::to_string(gold) + ") are misaligned");
  }
}

std::vector<DialogueState> argmax_states(std::span<const Prediction> predictions) {
  std::vector<DialogueState> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p.argmax_state);
  return out;
}

}  // namespace

double joint_goal_accuracy(std::span<const DialogueState> predicted, std::span<const DialogueState> gold) {
  check_aligned(predicted.size(), gold.size());
  std::size_t correct = 0;
  // States hold normalized values, so equality is the normalized exact match.
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == gold[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double slot_accuracy(std::span<const DialogueState> predicted, std::span<const DialogueState> gold,
                     const Ontology& ontology) {
  check_aligned(predicted.size(), gold.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (const auto& spec : ontology.specs()) {
      if (predicted[i].get(spec.slot) == gold[i].get(spec.slot)) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ontology.size() * gold.size());
}

double joint_goal_accuracy(std::span<const Prediction> predictions, std::span<const DialogueState> gold) {
  auto states = argmax_states(predictions);
  return joint_goal_accuracy(states, gold);
}

double slot_accuracy(std::span<const Prediction> predictions, std::span<const DialogueState> gold,
                     const Ontology& ontology) {
  auto states = argmax_states(predictions);
  return slot_accuracy(states, gold, ontology);
}

EvalResult evaluate_states(std::span<const DialogueState> predicted, std::span<const DialogueState> gold,
                           const Ontology& ontology) {
  return EvalResult{joint_goal_accuracy(predicted, gold), slot_accuracy(predicted, gold, ontology),
                    gold.size()};
}

EvalResult evaluate(const Scorer& scorer, const Corpus& corpus, std::span<const std::size_t> dialogues,
                    EvalScope scope) {
  std::vector<DialogueState> predicted;
  std::vector<DialogueState> gold;
  for (auto idx : dialogues) {
    const auto& d = corpus.at(idx);
    if (!d.gold_states) throw NotFoundError("evaluation dialogue " + d.id + " has no gold states");
    std::size_t first = scope == EvalScope::last_turn ? d.turn_count() : 1;
    for (std::size_t t = first; t <= d.turn_count(); ++t) {
      predicted.push_back(scorer.predict(build_history(d, t)).argmax_state);
      gold.push_back(d.gold(t));
    }
  }
  return evaluate_states(predicted, gold, scorer.ontology());
}

ReadingCost reading_cost(std::span<const TurnSelection> selections) {
  if (selections.empty()) throw RangeError("reading cost needs at least one labelled dialogue");
  std::vector<double> ratios;
  ratios.reserve(selections.size());
  for (const auto& s : selections) {
    if (s.turn < 1 || s.turn > s.turn_count) {
      throw RangeError("selected turn " + std::to_string(s.turn) + " outside 1.." + std::to_string(s.turn_count));
    }
    ratios.push_back(static_cast<double>(s.turn) / static_cast<double>(s.turn_count));
  }
  auto ms = mean_std(ratios);
  return ReadingCost{ms.mean, ms.stddev, selections.size()};
}

std::string_view to_string(CostMethod method) {
  switch (method) {
    case CostMethod::full_dialogue:
      return "full_dialogue";
    case CostMethod::last_turn:
      return "last_turn";
    case CostMethod::selected_turn:
      return "selected_turn";
  }
  return "full_dialogue";
}

double annotation_cost(const CostParams& p, CostMethod method) {
  if (p.read_minutes < 0 || p.annotate_minutes < 0 || p.dollars_per_minute < 0) {
    throw RangeError("cost parameters must be non-negative");
  }
  if (p.turn_count < 1 || p.selected_turn < 1 || p.selected_turn > p.turn_count) {
    throw RangeError("cost parameters need 1 <= t <= T");
  }
  const double T = static_cast<double>(p.turn_count);
  const double t = static_cast<double>(p.selected_turn);
  const double x = p.read_minutes;
  const double y = p.annotate_minutes;
  switch (method) {
    case CostMethod::full_dialogue:
      return p.dollars_per_minute * (T * x + T * y);
    case CostMethod::last_turn:
      return p.dollars_per_minute * (T * x + 1 * y);
    case CostMethod::selected_turn:
      return p.dollars_per_minute * (t * x + 1 * y);
  }
  return 0.0;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << "metric,value,stddev,n\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << format_number(r.value) << ',' << format_number(r.stddev) << ',' << r.n << '\n';
  }
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return MeanStd{mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

}  // namespace dstal
