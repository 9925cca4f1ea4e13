#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace dstal {

using json = nlohmann::json;

// Sentinel candidate meaning "slot not mentioned". Never stored in a
// DialogueState; absence of an entry is how "none" is represented.
inline constexpr std::string_view kNoneValue = "none";

struct DomainSlot {
  std::string domain;
  std::string slot;

  // "<domain>-<slot>", the form used in corpus files.
  std::string key() const { return domain + "-" + slot; }
  static DomainSlot parse(std::string_view key);

  auto operator<=>(const DomainSlot&) const = default;
};

enum class SlotKind {
  closed,     // values restricted to the ontology list
  open_time,  // any value; HH:MM spans in the history become candidates
  open_free,  // any value; labelled values seen in training become candidates
};

std::string_view to_string(SlotKind kind);

struct SlotSpec {
  DomainSlot slot;
  SlotKind kind = SlotKind::closed;
  std::vector<std::string> values;  // excludes the "none" sentinel
};

// The J predefined domain-slot pairs in a stable order, each with its
// candidate values. Immutable after construction.
class Ontology {
 public:
  Ontology() = default;
  explicit Ontology(std::vector<SlotSpec> specs);

  std::size_t size() const { return specs_.size(); }
  const SlotSpec& spec(std::size_t j) const { return specs_.at(j); }
  const DomainSlot& slot(std::size_t j) const { return specs_.at(j).slot; }
  const std::vector<SlotSpec>& specs() const { return specs_; }

  std::optional<std::size_t> index_of(const DomainSlot& slot) const;
  std::size_t require_index(const DomainSlot& slot) const;

  // Ontology values followed by the "none" sentinel.
  std::vector<std::string> candidates(std::size_t j) const;

  // Normalized-value admissibility for slot j. "none" is always admissible.
  bool admits(std::size_t j, std::string_view normalized_value) const;

  // Object keyed by "<domain>-<slot>". Closed slots are plain arrays; open
  // slots use {"open": "time"|"free", "values": [...]}.
  static Ontology from_json(const json& j);
  json to_json() const;

  bool operator==(const Ontology& other) const;

 private:
  std::vector<SlotSpec> specs_;
  std::map<DomainSlot, std::size_t> index_;
};

// Cumulative slot-value assignment B_t. Values are stored normalized.
class DialogueState {
 public:
  using Map = std::map<DomainSlot, std::string>;

  // Normalizes `value`; a "none" or empty value removes the entry.
  void set(const DomainSlot& slot, std::string_view value);
  std::optional<std::string> get(const DomainSlot& slot) const;
  bool contains(const DomainSlot& slot) const { return entries_.count(slot) != 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Map& entries() const { return entries_; }

  // [["domain","slot","value"], ...]
  json to_json() const;
  static DialogueState from_json(const json& j);

  bool operator==(const DialogueState&) const = default;

 private:
  Map entries_;
};

// Throws ValidationError naming the first offending slot.
void validate_state(const Ontology& ontology, const DialogueState& state);

struct Turn {
  std::size_t index = 1;  // 1-based
  std::string system_utterance;
  std::string user_utterance;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::string split = "train";
  std::vector<Turn> turns;
  std::optional<std::vector<DialogueState>> gold_states;

  std::size_t turn_count() const { return turns.size(); }
  const DialogueState& gold(std::size_t t) const;

  bool operator==(const Dialogue&) const = default;
};

struct TrainingInstance {
  std::string dialogue_id;
  std::size_t turn_index = 1;
  std::string history;
  DialogueState state;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(Ontology ontology, std::vector<Dialogue> dialogues);

  const Ontology& ontology() const { return ontology_; }
  const std::vector<Dialogue>& dialogues() const { return dialogues_; }
  std::size_t size() const { return dialogues_.size(); }
  const Dialogue& at(std::size_t i) const { return dialogues_.at(i); }

  const Dialogue& find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  // Indices (in file order) of dialogues tagged with `split`.
  std::vector<std::size_t> split_indices(std::string_view split) const;

  bool operator==(const Corpus& other) const {
    return ontology_ == other.ontology_ && dialogues_ == other.dialogues_;
  }

 private:
  Ontology ontology_;
  std::vector<Dialogue> dialogues_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Canonical JSON corpus. When `ontology` is given it replaces the one
// embedded in the document.
Corpus parse_corpus(std::string_view text, const Ontology* ontology = nullptr);
Corpus corpus_from_json(const json& doc, const Ontology* ontology = nullptr);
Corpus load_corpus(const std::filesystem::path& path, const Ontology* ontology = nullptr);
json corpus_to_json(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// M_t: "[S] <sys> [U] <user>" for turns 1..t joined by single spaces.
std::string build_history(const Dialogue& dialogue, std::size_t t);

struct InstanceMode {
  enum class Kind { full, last_turn, selected };
  Kind kind = Kind::full;
  std::size_t turn = 0;  // only for selected

  static InstanceMode full() { return {Kind::full, 0}; }
  static InstanceMode last_turn() { return {Kind::last_turn, 0}; }
  static InstanceMode selected(std::size_t t) { return {Kind::selected, t}; }
};

// Gold-backed instances. Throws if a requested turn has no gold state.
std::vector<TrainingInstance> make_instances(const Dialogue& dialogue, InstanceMode mode);

// Instance for a turn whose label came from elsewhere (an oracle record).
TrainingInstance make_instance(const Dialogue& dialogue, std::size_t t, DialogueState state);

struct CorpusStats {
  std::size_t dialogues = 0;
  std::size_t turns = 0;
  double avg_turns = 0.0;
  std::size_t max_turns = 0;
  std::size_t min_turns = 0;

  // avg rounded to two decimals, e.g. "6.97"
  std::string avg_text() const;
};

CorpusStats corpus_stats(const Corpus& corpus);
CorpusStats corpus_stats(const Corpus& corpus, std::string_view split);

}  // namespace dstal
