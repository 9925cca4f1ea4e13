#include "dstal/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dstal/errors.hpp"
#include "dstal/text.hpp"

namespace dstal {

namespace {

std::string clean_identifier(std::string_view raw, std::string_view what) {
  std::string id = normalize_value(raw);
  if (id.empty()) throw ValidationError("empty " + std::string(what) + " identifier");
  return id;
}

std::size_t line_of_offset(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

DomainSlot DomainSlot::parse(std::string_view key) {
  auto dash = key.find('-');
  if (dash == std::string_view::npos) {
    throw ValidationError("domain-slot key lacks '-': " + std::string(key), std::string(key));
  }
  return DomainSlot{clean_identifier(key.substr(0, dash), "domain"),
                    clean_identifier(key.substr(dash + 1), "slot")};
}

std::string_view to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::closed:
      return "closed";
    case SlotKind::open_time:
      return "time";
    case SlotKind::open_free:
      return "free";
  }
  return "closed";
}

// ---------------------------------------------------------------- Ontology

Ontology::Ontology(std::vector<SlotSpec> specs) {
  if (specs.empty()) throw ValidationError("ontology must define at least one domain-slot");
  for (auto& spec : specs) {
    spec.slot.domain = clean_identifier(spec.slot.domain, "domain");
    spec.slot.slot = clean_identifier(spec.slot.slot, "slot");
    std::vector<std::string> values;
    for (const auto& raw : spec.values) {
      std::string v = normalize_value(raw);
      if (v.empty() || v == kNoneValue) continue;
      if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(std::move(v));
    }
    if (values.empty() && spec.kind == SlotKind::closed) {
      throw ValidationError("domain-slot " + spec.slot.key() + " has no candidate values",
                            spec.slot.key());
    }
    spec.values = std::move(values);
    if (!index_.emplace(spec.slot, specs_.size()).second) {
      throw ValidationError("duplicate domain-slot " + spec.slot.key(), spec.slot.key());
    }
    specs_.push_back(std::move(spec));
  }
}

std::optional<std::size_t> Ontology::index_of(const DomainSlot& slot) const {
  auto it = index_.find(slot);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Ontology::require_index(const DomainSlot& slot) const {
  auto j = index_of(slot);
  if (!j) throw ValidationError("unknown domain-slot " + slot.key(), slot.key());
  return *j;
}

std::vector<std::string> Ontology::candidates(std::size_t j) const {
  auto out = specs_.at(j).values;
  out.emplace_back(kNoneValue);
  return out;
}

bool Ontology::admits(std::size_t j, std::string_view normalized_value) const {
  if (normalized_value == kNoneValue) return true;
  const auto& spec = specs_.at(j);
  if (spec.kind != SlotKind::closed) return !normalized_value.empty();
  return std::find(spec.values.begin(), spec.values.end(), normalized_value) != spec.values.end();
}

Ontology Ontology::from_json(const json& j) {
  if (!j.is_object()) throw ParseError("ontology must be a JSON object");
  std::vector<SlotSpec> specs;
  for (auto it = j.begin(); it != j.end(); ++it) {
    SlotSpec spec;
    spec.slot = DomainSlot::parse(it.key());
    const json* values = &it.value();
    if (it.value().is_object()) {
      const auto& obj = it.value();
      std::string open = obj.value("open", std::string("closed"));
      if (open == "time") {
        spec.kind = SlotKind::open_time;
      } else if (open == "free") {
        spec.kind = SlotKind::open_free;
      } else if (open != "closed") {
        throw ParseError("unknown open-slot kind '" + open + "' for " + it.key());
      }
      if (!obj.contains("values")) throw ParseError("ontology entry " + it.key() + " lacks values");
      values = &obj.at("values");
    }
    if (!values->is_array()) throw ParseError("ontology values for " + it.key() + " must be an array");
    for (const auto& v : *values) {
      if (!v.is_string()) throw ParseError("ontology value for " + it.key() + " must be a string");
      spec.values.push_back(v.get<std::string>());
    }
    specs.push_back(std::move(spec));
  }
  // nlohmann's object type is ordered by key; that is the stable order.
  return Ontology(std::move(specs));
}

json Ontology::to_json() const {
  json out = json::object();
  for (const auto& spec : specs_) {
    if (spec.kind == SlotKind::closed) {
      out[spec.slot.key()] = spec.values;
    } else {
      out[spec.slot.key()] = {{"open", std::string(to_string(spec.kind))}, {"values", spec.values}};
    }
  }
  return out;
}

bool Ontology::operator==(const Ontology& other) const {
  if (specs_.size() != other.specs_.size()) return false;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& a = specs_[i];
    const auto& b = other.specs_[i];
    if (a.slot != b.slot || a.kind != b.kind || a.values != b.values) return false;
  }
  return true;
}

// ----------------------------------------------------------- DialogueState

void DialogueState::set(const DomainSlot& slot, std::string_view value) {
  std::string v = normalize_value(value);
  if (v.empty() || v == kNoneValue) {
    entries_.erase(slot);
    return;
  }
  entries_[slot] = std::move(v);
}

std::optional<std::string> DialogueState::get(const DomainSlot& slot) const {
  auto it = entries_.find(slot);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

json DialogueState::to_json() const {
  json out = json::array();
  for (const auto& [slot, value] : entries_) out.push_back({slot.domain, slot.slot, value});
  return out;
}

DialogueState DialogueState::from_json(const json& j) {
  DialogueState state;
  if (j.is_object()) {
    // {"hotel-area": "centre"} form, accepted for hand-written labels.
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_string()) throw ParseError("state value for " + it.key() + " must be a string");
      state.set(DomainSlot::parse(it.key()), it.value().get<std::string>());
    }
    return state;
  }
  if (!j.is_array()) throw ParseError("dialogue state must be an array of triples");
  for (const auto& triple : j) {
    if (!triple.is_array() || triple.size() != 3 || !triple[0].is_string() || !triple[1].is_string() ||
        !triple[2].is_string()) {
      throw ParseError("state entry must be [\"domain\", \"slot\", \"value\"]");
    }
    DomainSlot slot{clean_identifier(triple[0].get<std::string>(), "domain"),
                    clean_identifier(triple[1].get<std::string>(), "slot")};
    if (state.contains(slot)) throw ParseError("state assigns " + slot.key() + " twice");
    state.set(slot, triple[2].get<std::string>());
  }
  return state;
}

void validate_state(const Ontology& ontology, const DialogueState& state) {
  for (const auto& [slot, value] : state.entries()) {
    auto j = ontology.index_of(slot);
    if (!j) throw ValidationError("unknown domain-slot " + slot.key(), slot.key());
    if (!ontology.admits(*j, value)) {
      throw ValidationError("value '" + value + "' is not in the ontology for closed slot " + slot.key(),
                            slot.key());
    }
  }
}

// ---------------------------------------------------------------- Dialogue

const DialogueState& Dialogue::gold(std::size_t t) const {
  if (!gold_states) throw NotFoundError("dialogue " + id + " has no gold states");
  if (t < 1 || t > gold_states->size()) {
    throw RangeError("turn " + std::to_string(t) + " out of range for dialogue " + id);
  }
  return (*gold_states)[t - 1];
}

// ------------------------------------------------------------------ Corpus

Corpus::Corpus(Ontology ontology, std::vector<Dialogue> dialogues)
    : ontology_(std::move(ontology)), dialogues_(std::move(dialogues)) {
  for (std::size_t i = 0; i < dialogues_.size(); ++i) {
    auto& d = dialogues_[i];
    if (d.id.empty()) throw ValidationError("dialogue at position " + std::to_string(i) + " has no id");
    if (d.turns.empty()) throw ValidationError("dialogue " + d.id + " has no turns");
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      if (d.turns[t].index != t + 1) {
        throw ValidationError("dialogue " + d.id + " turn indices must be 1..T");
      }
      if (normalize_value(d.turns[t].user_utterance).empty()) {
        throw ValidationError("dialogue " + d.id + " turn " + std::to_string(t + 1) +
                              " has an empty user utterance");
      }
    }
    if (d.gold_states) {
      if (d.gold_states->size() != d.turns.size()) {
        throw ValidationError("dialogue " + d.id + ": gold_states has " +
                              std::to_string(d.gold_states->size()) + " entries for " +
                              std::to_string(d.turns.size()) + " turns (misaligned)");
      }
      for (const auto& state : *d.gold_states) validate_state(ontology_, state);
    }
    if (!by_id_.emplace(d.id, i).second) throw ValidationError("duplicate dialogue id " + d.id);
  }
}

const Dialogue& Corpus::find(std::string_view id) const {
  auto idx = index_of(id);
  if (!idx) throw NotFoundError("unknown dialogue id " + std::string(id));
  return dialogues_[*idx];
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Corpus::split_indices(std::string_view split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dialogues_.size(); ++i) {
    if (dialogues_[i].split == split) out.push_back(i);
  }
  return out;
}

Corpus corpus_from_json(const json& doc, const Ontology* ontology) {
  if (!doc.is_object()) throw ParseError("corpus document must be a JSON object");
  Ontology onto;
  if (ontology) {
    onto = *ontology;
  } else {
    if (!doc.contains("ontology")) throw ParseError("corpus document lacks an \"ontology\" object");
    onto = Ontology::from_json(doc.at("ontology"));
  }
  if (!doc.contains("dialogues") || !doc.at("dialogues").is_array()) {
    throw ParseError("corpus document lacks a \"dialogues\" array");
  }

  std::vector<Dialogue> dialogues;
  for (const auto& jd : doc.at("dialogues")) {
    std::string id = jd.is_object() ? jd.value("id", std::string()) : std::string();
    try {
      if (!jd.is_object()) throw ParseError("dialogue entry must be an object");
      Dialogue d;
      d.id = id;
      d.split = jd.value("split", std::string("train"));
      const auto& turns = jd.at("turns");
      if (!turns.is_array()) throw ParseError("\"turns\" must be an array");
      for (std::size_t t = 0; t < turns.size(); ++t) {
        Turn turn;
        turn.index = t + 1;
        turn.system_utterance = turns[t].value("system", std::string());
        turn.user_utterance = turns[t].value("user", std::string());
        d.turns.push_back(std::move(turn));
      }
      if (jd.contains("states") && !jd.at("states").is_null()) {
        std::vector<DialogueState> states;
        for (const auto& js : jd.at("states")) states.push_back(DialogueState::from_json(js));
        d.gold_states = std::move(states);
      }
      dialogues.push_back(std::move(d));
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " (dialogue '" + id + "')", 0, id);
    } catch (const json::exception& e) {
      throw ParseError(std::string(e.what()) + " (dialogue '" + id + "')", 0, id);
    }
  }
  return Corpus(std::move(onto), std::move(dialogues));
}

Corpus parse_corpus(std::string_view text, const Ontology* ontology) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = line_of_offset(text, e.byte);
    throw ParseError("corpus JSON parse error at line " + std::to_string(line) + ": " + e.what(), line);
  }
  return corpus_from_json(doc, ontology);
}

Corpus load_corpus(const std::filesystem::path& path, const Ontology* ontology) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open corpus file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), ontology);
}

json corpus_to_json(const Corpus& corpus) {
  json dialogues = json::array();
  for (const auto& d : corpus.dialogues()) {
    json jd = {{"id", d.id}, {"split", d.split}};
    json turns = json::array();
    for (const auto& t : d.turns) turns.push_back({{"system", t.system_utterance}, {"user", t.user_utterance}});
    jd["turns"] = std::move(turns);
    if (d.gold_states) {
      json states = json::array();
      for (const auto& s : *d.gold_states) states.push_back(s.to_json());
      jd["states"] = std::move(states);
    }
    dialogues.push_back(std::move(jd));
  }
  return {{"ontology", corpus.ontology().to_json()}, {"dialogues", std::move(dialogues)}};
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file " + path.string());
  out << corpus_to_json(corpus).dump() << '\n';
}

// ------------------------------------------------------ histories/instances

std::string build_history(const Dialogue& dialogue, std::size_t t) {
  if (t < 1 || t > dialogue.turns.size()) {
    throw RangeError("turn " + std::to_string(t) + " out of range 1.." +
                     std::to_string(dialogue.turns.size()) + " for dialogue " + dialogue.id);
  }
  std::string out;
  for (std::size_t i = 0; i < t; ++i) {
    const auto& turn = dialogue.turns[i];
    if (i > 0) out.push_back(' ');
    out += "[S]";
    if (!turn.system_utterance.empty()) {
      out.push_back(' ');
      out += turn.system_utterance;
    }
    out += " [U] ";
    out += turn.user_utterance;
  }
  return out;
}

TrainingInstance make_instance(const Dialogue& dialogue, std::size_t t, DialogueState state) {
  return TrainingInstance{dialogue.id, t, build_history(dialogue, t), std::move(state)};
}

std::vector<TrainingInstance> make_instances(const Dialogue& dialogue, InstanceMode mode) {
  if (!dialogue.gold_states) {
    throw NotFoundError("dialogue " + dialogue.id + " has no labels for the requested turns");
  }
  std::vector<TrainingInstance> out;
  switch (mode.kind) {
    case InstanceMode::Kind::full:
      for (std::size_t t = 1; t <= dialogue.turn_count(); ++t) {
        out.push_back(make_instance(dialogue, t, dialogue.gold(t)));
      }
      break;
    case InstanceMode::Kind::last_turn:
      out.push_back(make_instance(dialogue, dialogue.turn_count(), dialogue.gold(dialogue.turn_count())));
      break;
    case InstanceMode::Kind::selected:
      out.push_back(make_instance(dialogue, mode.turn, dialogue.gold(mode.turn)));
      break;
  }
  return out;
}

// ------------------------------------------------------------------- stats

std::string CorpusStats::avg_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << avg_turns;
  return os.str();
}

namespace {

CorpusStats stats_over(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw RangeError("corpus_stats requires a non-empty corpus");
  CorpusStats s;
  s.min_turns = static_cast<std::size_t>(-1);
  for (auto i : indices) {
    std::size_t t = corpus.at(i).turn_count();
    ++s.dialogues;
    s.turns += t;
    s.max_turns = std::max(s.max_turns, t);
    s.min_turns = std::min(s.min_turns, t);
  }
  s.avg_turns = static_cast<double>(s.turns) / static_cast<double>(s.dialogues);
  return s;
}

}  // namespace

CorpusStats corpus_stats(const Corpus& corpus) {
  std::vector<std::size_t> all(corpus.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return stats_over(corpus, all);
}

CorpusStats corpus_stats(const Corpus& corpus, std::string_view split) {
  return stats_over(corpus, corpus.split_indices(split));
}

}  // namespace dstal
