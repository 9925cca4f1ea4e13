#include "dstal/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "dstal/errors.hpp"
#include "dstal/text.hpp"

namespace dstal {

std::size_t SlotDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

void refresh_argmax_state(Prediction& prediction) {
  DialogueState state;
  for (const auto& dist : prediction.per_slot) {
    if (dist.candidates.empty()) continue;
    const auto& value = dist.candidates[dist.argmax()];
    if (value != kNoneValue) state.set(dist.slot, value);
  }
  prediction.argmax_state = std::move(state);
}

std::vector<double> softmax(std::span<const double> scores, double temperature) {
  if (!(temperature > 0.0)) throw RangeError("softmax temperature must be positive");
  std::vector<double> probs(scores.size());
  if (scores.empty()) return probs;
  double peak = *std::max_element(scores.begin(), scores.end()) / temperature;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp(scores[i] / temperature - peak);
    total += probs[i];
  }
  // Keep every probability strictly positive even when exp underflows.
  constexpr double floor = std::numeric_limits<double>::min();
  for (auto& p : probs) p = std::max(p / total, floor);
  return probs;
}

// --------------------------------------------------------------- params

json LexicalScorerParams::to_json() const {
  return {{"smoothing", smoothing},
          {"none_prior", none_prior},
          {"temperature", temperature},
          {"match_bonus", match_bonus}};
}

LexicalScorerParams LexicalScorerParams::from_json(const json& j) {
  LexicalScorerParams p;
  p.smoothing = j.value("smoothing", p.smoothing);
  p.none_prior = j.value("none_prior", p.none_prior);
  p.temperature = j.value("temperature", p.temperature);
  p.match_bonus = j.value("match_bonus", p.match_bonus);
  if (!(p.temperature > 0.0)) throw ValidationError("scorer temperature must be positive");
  return p;
}

// --------------------------------------------------------------- scorer

namespace {

std::string label_key(std::size_t slot, std::string_view value) {
  std::string key = std::to_string(slot);
  key.push_back('\x1f');
  key += value;
  return key;
}

std::uint64_t count_key(std::uint32_t token, std::uint32_t label) {
  return (static_cast<std::uint64_t>(token) << 32) | label;
}

// " a b " for a value; empty when the value has no word tokens.
std::string value_line(std::string_view value) {
  auto toks = tokenize(value);
  if (toks.empty()) return {};
  return token_line(toks);
}

}  // namespace

LexicalScorer::LexicalScorer(Ontology ontology, LexicalScorerParams params)
    : ontology_(std::move(ontology)), params_(params) {
  if (!(params_.temperature > 0.0)) throw ValidationError("scorer temperature must be positive");
  value_lines_.resize(ontology_.size());
  for (std::size_t j = 0; j < ontology_.size(); ++j) {
    for (const auto& v : ontology_.spec(j).values) value_lines_[j].push_back(value_line(v));
  }
  reinitialize();
}

void LexicalScorer::reinitialize() {
  token_ids_.clear();
  tokens_.clear();
  label_ids_.clear();
  labels_.clear();
  counts_.clear();
  none_counts_.assign(ontology_.size(), 0);
  learned_values_.assign(ontology_.size(), {});
  instances_seen_ = 0;
}

std::unique_ptr<Scorer> LexicalScorer::clone_untrained() const {
  return std::make_unique<LexicalScorer>(ontology_, params_);
}

std::uint32_t LexicalScorer::label_id(std::size_t slot, const std::string& value) {
  auto [it, inserted] = label_ids_.try_emplace(label_key(slot, value), static_cast<std::uint32_t>(labels_.size()));
  if (inserted) labels_.push_back(Label{slot, value});
  return it->second;
}

std::uint32_t LexicalScorer::token_id(const std::string& token) {
  auto [it, inserted] = token_ids_.try_emplace(token, static_cast<std::uint32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

void LexicalScorer::train(std::span<const TrainingInstance> instances) {
  for (const auto& inst : instances) {
    validate_state(ontology_, inst.state);
  }
  for (const auto& inst : instances) {
    auto toks = tokenize(inst.history);
    std::vector<std::uint32_t> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(token_id(t));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::vector<bool> present(ontology_.size(), false);
    for (const auto& [slot, value] : inst.state.entries()) {
      std::size_t j = ontology_.require_index(slot);
      present[j] = true;
      std::uint32_t lid = label_id(j, value);
      for (auto tid : ids) ++counts_[count_key(tid, lid)];
      if (ontology_.spec(j).kind == SlotKind::open_free) {
        auto& learned = learned_values_[j];
        auto pos = std::lower_bound(learned.begin(), learned.end(), value);
        if (pos == learned.end() || *pos != value) learned.insert(pos, value);
      }
    }
    for (std::size_t j = 0; j < ontology_.size(); ++j) {
      if (!present[j]) ++none_counts_[j];
    }
    ++instances_seen_;
  }
}

Prediction LexicalScorer::predict(std::string_view history) const {
  auto toks = tokenize(history);
  const std::string line = token_line(toks);

  std::vector<std::uint32_t> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) {
    auto it = token_ids_.find(t);
    if (it != token_ids_.end()) ids.push_back(it->second);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  auto evidence = [&](std::size_t j, const std::string& value) -> double {
    auto it = label_ids_.find(label_key(j, value));
    if (it == label_ids_.end()) return 0.0;
    std::uint64_t sum = 0;
    for (auto tid : ids) {
      auto c = counts_.find(count_key(tid, it->second));
      if (c != counts_.end()) sum += c->second;
    }
    return static_cast<double>(sum);
  };

  Prediction pred;
  pred.per_slot.reserve(ontology_.size());
  for (std::size_t j = 0; j < ontology_.size(); ++j) {
    const auto& spec = ontology_.spec(j);
    SlotDistribution dist;
    dist.slot = spec.slot;
    dist.candidates = spec.values;
    std::vector<bool> matched;
    for (const auto& vl : value_lines_[j]) matched.push_back(!vl.empty() && line.find(vl) != std::string::npos);

    auto known = [&](const std::string& v) {
      return std::find(dist.candidates.begin(), dist.candidates.end(), v) != dist.candidates.end();
    };
    if (spec.kind == SlotKind::open_time) {
      for (const auto& t : toks) {
        if (is_time_token(t) && !known(t)) {
          dist.candidates.push_back(t);
          matched.push_back(true);
        }
      }
    } else if (spec.kind == SlotKind::open_free) {
      std::vector<std::pair<std::size_t, std::string>> found;
      for (const auto& v : learned_values_[j]) {
        if (known(v)) continue;
        auto vl = value_line(v);
        if (vl.empty()) continue;
        auto pos = line.find(vl);
        if (pos != std::string::npos) found.emplace_back(pos, v);
      }
      std::sort(found.begin(), found.end());
      for (auto& [pos, v] : found) {
        dist.candidates.push_back(std::move(v));
        matched.push_back(true);
      }
    }

    dist.scores.reserve(dist.candidates.size() + 1);
    for (std::size_t c = 0; c < dist.candidates.size(); ++c) {
      double score = params_.smoothing;
      if (matched[c]) score += params_.match_bonus + evidence(j, dist.candidates[c]);
      dist.scores.push_back(score);
    }
    dist.candidates.emplace_back(kNoneValue);
    dist.scores.push_back(params_.smoothing + params_.none_prior);
    dist.probs = softmax(dist.scores, params_.temperature);
    pred.per_slot.push_back(std::move(dist));
  }
  refresh_argmax_state(pred);
  return pred;
}

std::uint32_t LexicalScorer::count(std::string_view token, const DomainSlot& slot, std::string_view value) const {
  auto j = ontology_.index_of(slot);
  if (!j) return 0;
  auto tok = token_ids_.find(std::string(token));
  auto lab = label_ids_.find(label_key(*j, normalize_value(value)));
  if (tok == token_ids_.end() || lab == label_ids_.end()) return 0;
  auto c = counts_.find(count_key(tok->second, lab->second));
  return c == counts_.end() ? 0 : c->second;
}

std::uint32_t LexicalScorer::none_count(const DomainSlot& slot) const {
  auto j = ontology_.index_of(slot);
  return j ? none_counts_[*j] : 0;
}

json LexicalScorer::snapshot() const {
  std::vector<std::tuple<std::string, std::string, std::string, std::uint32_t>> rows;
  rows.reserve(counts_.size());
  for (const auto& [key, c] : counts_) {
    const auto& label = labels_[static_cast<std::uint32_t>(key & 0xffffffffu)];
    rows.emplace_back(tokens_[key >> 32], ontology_.slot(label.slot).key(), label.value, c);
  }
  std::sort(rows.begin(), rows.end());
  json counts = json::array();
  for (const auto& [tok, slot, value, c] : rows) counts.push_back({tok, slot, value, c});

  json none = json::object();
  json learned = json::object();
  for (std::size_t j = 0; j < ontology_.size(); ++j) {
    none[ontology_.slot(j).key()] = none_counts_[j];
    if (!learned_values_[j].empty()) learned[ontology_.slot(j).key()] = learned_values_[j];
  }
  return {{"params", params_.to_json()},
          {"instances", instances_seen_},
          {"none_counts", std::move(none)},
          {"learned_values", std::move(learned)},
          {"counts", std::move(counts)}};
}

LexicalScorer LexicalScorer::from_snapshot(Ontology ontology, const json& snapshot) {
  LexicalScorer scorer(std::move(ontology), LexicalScorerParams::from_json(snapshot.at("params")));
  scorer.instances_seen_ = snapshot.at("instances").get<std::size_t>();
  for (const auto& row : snapshot.at("counts")) {
    std::size_t j = scorer.ontology_.require_index(DomainSlot::parse(row.at(1).get<std::string>()));
    auto tid = scorer.token_id(row.at(0).get<std::string>());
    auto lid = scorer.label_id(j, row.at(2).get<std::string>());
    scorer.counts_[count_key(tid, lid)] = row.at(3).get<std::uint32_t>();
  }
  for (auto it = snapshot.at("none_counts").begin(); it != snapshot.at("none_counts").end(); ++it) {
    scorer.none_counts_[scorer.ontology_.require_index(DomainSlot::parse(it.key()))] = it.value().get<std::uint32_t>();
  }
  for (auto it = snapshot.at("learned_values").begin(); it != snapshot.at("learned_values").end(); ++it) {
    scorer.learned_values_[scorer.ontology_.require_index(DomainSlot::parse(it.key()))] =
        it.value().get<std::vector<std::string>>();
  }
  return scorer;
}

}  // namespace dstal
