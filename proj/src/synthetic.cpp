#include <algorithm>
#include <set>

#include "dstal/errors.hpp"
#include "dstal/experiment.hpp"
#include "dstal/random.hpp"

namespace dstal {

void SyntheticSpec::validate() const {
  if (n_dialogues < 1) throw ValidationError("synthetic spec needs at least one dialogue");
  if (min_turns < 1) throw ValidationError("min_turns must be at least 1");
  if (min_turns > max_turns) throw ValidationError("min_turns exceeds max_turns");
  if (domains < 1 || slots_per_domain < 1) throw ValidationError("ontology needs at least one domain and slot");
  if (values_per_slot < 2) throw ValidationError("values_per_slot must be at least 2");
  if (min_new_slots < 1 || min_new_slots > max_new_slots) {
    throw ValidationError("need 1 <= min_new_slots <= max_new_slots");
  }
  const std::size_t j = domains * slots_per_domain;
  if (max_new_slots > j) {
    throw ValidationError("max_new_slots (" + std::to_string(max_new_slots) + ") exceeds the ontology size (" +
                          std::to_string(j) + ")");
  }
  if (trailing_empty_turns >= min_turns) {
    throw ValidationError("trailing_empty_turns must leave at least one contentful turn (< min_turns)");
  }
  if (!(idle_turn_rate >= 0.0 && idle_turn_rate < 1.0)) throw ValidationError("idle_turn_rate must be in [0, 1)");
  if (!(system_echo_rate >= 0.0 && system_echo_rate <= 1.0)) {
    throw ValidationError("system_echo_rate must be in [0, 1]");
  }
  if (max_domains_per_dialogue < 1) throw ValidationError("max_domains_per_dialogue must be at least 1");
}

json SyntheticSpec::to_json() const {
  return {{"n_dialogues", n_dialogues},
          {"n_validation", n_validation},
          {"n_test", n_test},
          {"min_turns", min_turns},
          {"max_turns", max_turns},
          {"domains", domains},
          {"slots_per_domain", slots_per_domain},
          {"values_per_slot", values_per_slot},
          {"min_new_slots", min_new_slots},
          {"max_new_slots", max_new_slots},
          {"trailing_empty_turns", trailing_empty_turns},
          {"idle_turn_rate", idle_turn_rate},
          {"max_domains_per_dialogue", max_domains_per_dialogue},
          {"shared_values", shared_values},
          {"system_echo_rate", system_echo_rate}};
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  SyntheticSpec s;
  try {
    s.n_dialogues = j.value("n_dialogues", s.n_dialogues);
    s.n_validation = j.value("n_validation", s.n_validation);
    s.n_test = j.value("n_test", s.n_test);
    s.min_turns = j.value("min_turns", s.min_turns);
    s.max_turns = j.value("max_turns", s.max_turns);
    s.domains = j.value("domains", s.domains);
    s.slots_per_domain = j.value("slots_per_domain", s.slots_per_domain);
    s.values_per_slot = j.value("values_per_slot", s.values_per_slot);
    s.min_new_slots = j.value("min_new_slots", s.min_new_slots);
    s.max_new_slots = j.value("max_new_slots", s.max_new_slots);
    s.trailing_empty_turns = j.value("trailing_empty_turns", s.trailing_empty_turns);
    s.idle_turn_rate = j.value("idle_turn_rate", s.idle_turn_rate);
    s.max_domains_per_dialogue = j.value("max_domains_per_dialogue", s.max_domains_per_dialogue);
    s.shared_values = j.value("shared_values", s.shared_values);
    s.system_echo_rate = j.value("system_echo_rate", s.system_echo_rate);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

const std::vector<std::string> kDomainNames = {"hotel", "restaurant", "train", "taxi",
                                               "attraction", "hospital", "police", "bus"};
const std::vector<std::string> kSlotNames = {"area", "price", "day", "people", "stay", "food",
                                             "stars", "type", "parking", "internet", "leave", "arrive"};
const std::vector<std::string> kFiller = {"please", "okay", "well", "actually", "also",
                                          "maybe", "great", "sure", "right", "so"};
const std::vector<std::string> kOpeners = {"i am looking for", "i need", "i would like", "can you find me"};
const std::vector<std::string> kRequests = {"phone number", "address", "postcode", "reference"};
const std::vector<std::string> kSystemGeneric = {"how can i help you further ?", "sure , what else do you need ?",
                                                 "let me check that for you .", "is there anything else ?"};
const std::vector<std::string> kPoliteUser = {"thank you so much that is all i need",
                                              "thanks a lot for the help goodbye", "great that is all thanks",
                                              "no that will be all thank you"};
const std::vector<std::string> kPoliteSystem = {"you are welcome .", "your booking is complete .",
                                                "have a nice day .", "glad i could help ."};

double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[uniform_index(rng, items.size())];
}

std::string name_or_index(const std::vector<std::string>& names, std::size_t i, const char* prefix) {
  return i < names.size() ? names[i] : std::string(prefix) + std::to_string(i + 1);
}

// Pronounceable, collision-free surface forms for slot values.
std::vector<std::string> pseudo_words(Rng& rng, std::size_t n) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::set<std::string> reserved(kFiller.begin(), kFiller.end());
  std::vector<std::string> out;
  std::set<std::string> used;
  while (out.size() < n) {
    std::string w;
    for (int s = 0; s < 3; ++s) {
      w.push_back(consonants[uniform_index(rng, consonants.size())]);
      w.push_back(vowels[uniform_index(rng, vowels.size())]);
    }
    if (reserved.count(w) || !used.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

struct SlotRef {
  std::size_t domain;
  std::size_t slot;
  std::size_t index;  // ontology index
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();

  Rng vocab_rng(derive_seed(seed, 0x6f6e746fULL));
  const std::size_t value_lists = spec.shared_values ? spec.slots_per_domain : spec.domains * spec.slots_per_domain;
  auto words = pseudo_words(vocab_rng, value_lists * spec.values_per_slot);

  std::vector<std::string> domain_names;
  for (std::size_t d = 0; d < spec.domains; ++d) domain_names.push_back(name_or_index(kDomainNames, d, "domain"));
  std::vector<std::string> slot_names;
  for (std::size_t s = 0; s < spec.slots_per_domain; ++s) slot_names.push_back(name_or_index(kSlotNames, s, "slot"));

  std::vector<SlotSpec> specs;
  for (std::size_t d = 0; d < spec.domains; ++d) {
    for (std::size_t s = 0; s < spec.slots_per_domain; ++s) {
      std::size_t list = spec.shared_values ? s : d * spec.slots_per_domain + s;
      SlotSpec ss;
      ss.slot = DomainSlot{domain_names[d], slot_names[s]};
      ss.values.assign(words.begin() + static_cast<std::ptrdiff_t>(list * spec.values_per_slot),
                       words.begin() + static_cast<std::ptrdiff_t>((list + 1) * spec.values_per_slot));
      specs.push_back(std::move(ss));
    }
  }
  Ontology ontology(std::move(specs));

  struct SplitPlan {
    const char* name;
    const char* prefix;
    std::size_t count;
    std::uint64_t stream;
  };
  const SplitPlan splits[] = {{"train", "syn-train-", spec.n_dialogues, 1},
                              {"validation", "syn-val-", spec.n_validation, 2},
                              {"test", "syn-test-", spec.n_test, 3}};

  std::vector<Dialogue> dialogues;
  std::map<std::string, std::size_t> summary;
  for (const auto& split : splits) {
    for (std::size_t n = 0; n < split.count; ++n) {
      Rng rng(derive_seed(seed, split.stream, n));
      Dialogue d;
      d.id = split.prefix + std::to_string(n + 1);
      d.split = split.name;

      const std::size_t T = spec.min_turns + uniform_index(rng, spec.max_turns - spec.min_turns + 1);
      const std::size_t contentful = T - spec.trailing_empty_turns;

      const std::size_t n_domains = 1 + uniform_index(rng, std::min(spec.max_domains_per_dialogue, spec.domains));
      auto chosen_domains = sample_without_replacement(rng, spec.domains, n_domains);
      std::vector<SlotRef> open_slots;
      for (auto dom : chosen_domains) {
        for (std::size_t s = 0; s < spec.slots_per_domain; ++s) {
          open_slots.push_back(SlotRef{dom, s, dom * spec.slots_per_domain + s});
        }
      }
      auto order = sample_without_replacement(rng, open_slots.size(), open_slots.size());
      std::size_t next_slot = 0;

      DialogueState state;
      std::vector<DialogueState> states;
      std::size_t summary_turn = 1;
      for (std::size_t t = 1; t <= T; ++t) {
        Turn turn;
        turn.index = t;

        // System side responds to what happened so far.
        if (t > 1) {
          if (t > contentful) {
            turn.system_utterance = pick(rng, kPoliteSystem);
          } else if (!state.empty() && unit(rng) < spec.system_echo_rate) {
            auto it = state.entries().begin();
            std::advance(it, static_cast<std::ptrdiff_t>(uniform_index(rng, state.size())));
            turn.system_utterance = "i found a " + it->first.domain + " with " + it->first.slot + " " + it->second + " .";
          } else {
            turn.system_utterance = pick(rng, kSystemGeneric);
          }
        }

        std::string user;
        if (t > contentful) {
          user = pick(rng, kPoliteUser);
        } else {
          std::size_t fresh = 0;
          if (t == 1 || unit(rng) >= spec.idle_turn_rate) {
            fresh = spec.min_new_slots + uniform_index(rng, spec.max_new_slots - spec.min_new_slots + 1);
          }
          fresh = std::min(fresh, open_slots.size() - next_slot);
          if (fresh == 0) {
            user = "what is the " + pick(rng, kRequests) + " of the " +
                   domain_names[chosen_domains[uniform_index(rng, chosen_domains.size())]] + " ?";
          } else {
            user = pick(rng, kOpeners);
            for (std::size_t i = 0; i < fresh; ++i) {
              const auto& ref = open_slots[order[next_slot++]];
              const auto& values = ontology.spec(ref.index).values;
              const auto& value = values[uniform_index(rng, values.size())];
              user += (i == 0 ? " a " : " and the ");
              user += domain_names[ref.domain] + " " + slot_names[ref.slot] + " " + value;
              state.set(ontology.slot(ref.index), value);
            }
            summary_turn = t;
          }
          std::size_t filler = uniform_index(rng, 3);
          for (std::size_t i = 0; i < filler; ++i) user += " " + pick(rng, kFiller);
        }
        turn.user_utterance = std::move(user);
        d.turns.push_back(std::move(turn));
        states.push_back(state);
      }
      d.gold_states = std::move(states);
      summary.emplace(d.id, summary_turn);
      dialogues.push_back(std::move(d));
    }
  }
  return SyntheticCorpus{Corpus(std::move(ontology), std::move(dialogues)), std::move(summary)};
}

json synthetic_to_json(const SyntheticCorpus& synthetic) {
  json doc = corpus_to_json(synthetic.corpus);
  for (auto& jd : doc["dialogues"]) {
    jd["summary_turn"] = synthetic.summary_turn.at(jd["id"].get<std::string>());
  }
  return doc;
}

}  // namespace dstal
