#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dstal/corpus.hpp"
#include "dstal/scorer.hpp"

namespace dstal {

enum class StrategyKind { random, max_entropy, least_confidence };

std::string_view to_string(StrategyKind kind);          // "rs" | "me" | "lc"
StrategyKind parse_strategy(std::string_view name);     // accepts rs/me/lc, any case

struct Strategy {
  StrategyKind kind = StrategyKind::max_entropy;
  std::uint64_t rng_seed = 0;  // RS only
};

struct TurnScore {
  std::size_t turn_index = 0;
  double entropy = 0.0;     // e_t, summed slot entropies (natural log)
  double confidence = 0.0;  // c_t, summed per-slot maximum raw score
};

// -sum p ln p over the candidates; p = 0 terms contribute 0.
double slot_entropy(const SlotDistribution& dist);
double slot_entropy(std::span<const double> probs);

// Sum over the ontology's J slots. Throws ValidationError when the
// prediction does not cover exactly those slots.
double turn_entropy(const Prediction& prediction, const Ontology& ontology);
// Sum over slots of max raw score (pre-softmax), not of probabilities.
double turn_confidence(const Prediction& prediction, const Ontology& ontology);

TurnScore score_turn(const Prediction& prediction, const Ontology& ontology, std::size_t turn_index);

// Predicts on build_history(d, t) for t = 1..T. Never reads gold labels.
std::vector<TurnScore> score_dialogue(const Dialogue& dialogue, const Scorer& scorer);

// ME: first index of the maximum entropy. LC: first index of the minimum
// confidence. Returns a 1-based turn index. RS is not score-driven and is
// rejected here.
std::size_t select_from_scores(std::span<const TurnScore> scores, StrategyKind kind);

// Uniform turn in 1..T drawn from a generator seeded with `seed`.
std::size_t random_turn(std::size_t turn_count, std::uint64_t seed);

// One turn of `dialogue` chosen by `strategy` (1-based).
std::size_t select_turn(const Dialogue& dialogue, const Scorer& scorer, const Strategy& strategy);

}  // namespace dstal
