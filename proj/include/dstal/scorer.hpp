#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dstal/corpus.hpp"

namespace dstal {

// Value distribution for one domain-slot at one turn.
struct SlotDistribution {
  DomainSlot slot;
  std::vector<std::string> candidates;  // ontology order, dynamic spans, then "none"
  std::vector<double> scores;           // raw (pre-softmax) scores
  std::vector<double> probs;

  // Highest-probability candidate; ties go to the earliest candidate.
  std::size_t argmax() const;
};

struct Prediction {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  std::vector<SlotDistribution> per_slot;  // aligned with the ontology
  DialogueState argmax_state;
};

// Rebuilds argmax_state from per_slot.
void refresh_argmax_state(Prediction& prediction);

// Softmax of scores / temperature, computed stably.
std::vector<double> softmax(std::span<const double> scores, double temperature = 1.0);

// The base DST model capability the active-learning loop depends on.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual const Ontology& ontology() const = 0;
  // Forget everything learned; back to the initial configuration.
  virtual void reinitialize() = 0;
  virtual void train(std::span<const TrainingInstance> instances) = 0;
  // Deterministic given the trained parameters. Safe to call concurrently.
  virtual Prediction predict(std::string_view history) const = 0;
  virtual std::unique_ptr<Scorer> clone_untrained() const = 0;
};

struct LexicalScorerParams {
  double smoothing = 1.0;    // alpha, added to every candidate
  double none_prior = 2.0;   // beta, extra score of the "none" candidate
  double temperature = 1.0;  // tau
  // Added to a candidate whose surface form occurs in the history. Zero
  // reproduces the plain count-times-match rule.
  double match_bonus = 0.0;

  json to_json() const;
  static LexicalScorerParams from_json(const json& j);
};

// Ontology-guided co-occurrence model. A candidate value v of slot j
// scores
//
//   alpha + [v occurs in history] * (match_bonus + sum_{tok in history} count(tok, j=v))
//
// over the distinct history tokens, and "none" scores alpha + beta.
// Occurrence is token-aligned substring matching on the normalized text.
class LexicalScorer final : public Scorer {
 public:
  explicit LexicalScorer(Ontology ontology, LexicalScorerParams params = {});

  const Ontology& ontology() const override { return ontology_; }
  const LexicalScorerParams& params() const { return params_; }

  void reinitialize() override;
  void train(std::span<const TrainingInstance> instances) override;
  Prediction predict(std::string_view history) const override;
  std::unique_ptr<Scorer> clone_untrained() const override;

  std::uint32_t count(std::string_view token, const DomainSlot& slot, std::string_view value) const;
  std::uint32_t none_count(const DomainSlot& slot) const;
  std::size_t instances_seen() const { return instances_seen_; }

  // Counts and parameters in a canonical order, for audit and replay.
  json snapshot() const;
  static LexicalScorer from_snapshot(Ontology ontology, const json& snapshot);

 private:
  struct Label {
    std::size_t slot;
    std::string value;
  };

  std::uint32_t label_id(std::size_t slot, const std::string& value);
  std::uint32_t token_id(const std::string& token);

  Ontology ontology_;
  LexicalScorerParams params_;
  // " tok tok " forms of each ontology value, per slot.
  std::vector<std::vector<std::string>> value_lines_;

  std::unordered_map<std::string, std::uint32_t> token_ids_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> label_ids_;  // "<slot>\x1f<value>"
  std::vector<Label> labels_;
  std::unordered_map<std::uint64_t, std::uint32_t> counts_;  // (token << 32 | label)
  std::vector<std::uint32_t> none_counts_;
  // Labelled values of open-free slots, per slot, sorted.
  std::vector<std::vector<std::string>> learned_values_;
  std::size_t instances_seen_ = 0;
};

}  // namespace dstal
