#include "dstal/acquisition.hpp"

#include <cctype>
#include <cmath>

#include "dstal/errors.hpp"
#include "dstal/random.hpp"

namespace dstal {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::random:
      return "rs";
    case StrategyKind::max_entropy:
      return "me";
    case StrategyKind::least_confidence:
      return "lc";
  }
  return "rs";
}

StrategyKind parse_strategy(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "rs" || lower == "random") return StrategyKind::random;
  if (lower == "me" || lower == "entropy" || lower == "max_entropy") return StrategyKind::max_entropy;
  if (lower == "lc" || lower == "least_confidence") return StrategyKind::least_confidence;
  throw ValidationError("unknown strategy '" + std::string(name) + "' (expected rs, me or lc)");
}

double slot_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double slot_entropy(const SlotDistribution& dist) { return slot_entropy(dist.probs); }

namespace {

void check_coverage(const Prediction& prediction, const Ontology& ontology) {
  if (prediction.per_slot.size() != ontology.size()) {
    throw ValidationError("prediction covers " + std::to_string(prediction.per_slot.size()) + " of " +
                          std::to_string(ontology.size()) + " domain-slots");
  }
  for (std::size_t j = 0; j < ontology.size(); ++j) {
    if (prediction.per_slot[j].slot != ontology.slot(j)) {
      throw ValidationError("prediction is missing domain-slot " + ontology.slot(j).key(),
                            ontology.slot(j).key());
    }
    if (prediction.per_slot[j].scores.empty()) {
      throw ValidationError("empty distribution for " + ontology.slot(j).key(), ontology.slot(j).key());
    }
  }
}

}  // namespace

double turn_entropy(const Prediction& prediction, const Ontology& ontology) {
  check_coverage(prediction, ontology);
  double total = 0.0;
  for (const auto& dist : prediction.per_slot) total += slot_entropy(dist);
  return total;
}

double turn_confidence(const Prediction& prediction, const Ontology& ontology) {
  check_coverage(prediction, ontology);
  double total = 0.0;
  for (const auto& dist : prediction.per_slot) {
    double best = dist.scores.front();
    for (double s : dist.scores) best = std::max(best, s);
    total += best;
  }
  return total;
}

TurnScore score_turn(const Prediction& prediction, const Ontology& ontology, std::size_t turn_index) {
  return TurnScore{turn_index, turn_entropy(prediction, ontology), turn_confidence(prediction, ontology)};
}

std::vector<TurnScore> score_dialogue(const Dialogue& dialogue, const Scorer& scorer) {
  std::vector<TurnScore> scores;
  scores.reserve(dialogue.turn_count());
  for (std::size_t t = 1; t <= dialogue.turn_count(); ++t) {
    auto pred = scorer.predict(build_history(dialogue, t));
    scores.push_back(score_turn(pred, scorer.ontology(), t));
  }
  return scores;
}

std::size_t select_from_scores(std::span<const TurnScore> scores, StrategyKind kind) {
  if (scores.empty()) throw RangeError("cannot select a turn from an empty dialogue");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    switch (kind) {
      case StrategyKind::max_entropy:
        if (scores[i].entropy > scores[best].entropy) best = i;
        break;
      case StrategyKind::least_confidence:
        if (scores[i].confidence < scores[best].confidence) best = i;
        break;
      case StrategyKind::random:
        throw ValidationError("random sampling does not rank turn scores");
    }
  }
  return scores[best].turn_index;
}

std::size_t random_turn(std::size_t turn_count, std::uint64_t seed) {
  if (turn_count == 0) throw RangeError("cannot select a turn from an empty dialogue");
  Rng rng(seed);
  return 1 + uniform_index(rng, turn_count);
}

std::size_t select_turn(const Dialogue& dialogue, const Scorer& scorer, const Strategy& strategy) {
  if (dialogue.turns.empty()) throw RangeError("cannot select a turn from an empty dialogue");
  if (dialogue.turn_count() == 1) return 1;
  if (strategy.kind == StrategyKind::random) return random_turn(dialogue.turn_count(), strategy.rng_seed);
  auto scores = score_dialogue(dialogue, scorer);
  return select_from_scores(scores, strategy.kind);
}

}  // namespace dstal
