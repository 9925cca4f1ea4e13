#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dstal/corpus.hpp"
#include "dstal/experiment.hpp"

namespace dstal::testing {

using Triple = std::tuple<std::string, std::string, std::string>;

inline DialogueState state_of(const std::vector<Triple>& triples) {
  DialogueState s;
  for (const auto& [d, sl, v] : triples) s.set(DomainSlot{d, sl}, v);
  return s;
}

inline Ontology hotel_restaurant_ontology() {
  return Ontology({
      SlotSpec{DomainSlot{"hotel", "area"}, SlotKind::closed, {"north", "south", "centre"}},
      SlotSpec{DomainSlot{"hotel", "pricerange"}, SlotKind::closed, {"cheap", "expensive"}},
      SlotSpec{DomainSlot{"restaurant", "area"}, SlotKind::closed, {"north", "south", "centre"}},
      SlotSpec{DomainSlot{"restaurant", "food"}, SlotKind::closed, {"chinese", "italian"}},
  });
}

// (system, user) pairs plus one cumulative state per turn.
inline Dialogue make_dialogue(std::string id, const std::vector<std::pair<std::string, std::string>>& turns,
                              const std::vector<std::vector<Triple>>& states, std::string split = "train") {
  Dialogue d;
  d.id = std::move(id);
  d.split = std::move(split);
  for (std::size_t i = 0; i < turns.size(); ++i) {
    d.turns.push_back(Turn{i + 1, turns[i].first, turns[i].second});
  }
  if (!states.empty()) {
    std::vector<DialogueState> gold;
    for (const auto& s : states) gold.push_back(state_of(s));
    d.gold_states = std::move(gold);
  }
  return d;
}

// n dialogues of `turns` turns each; turn t of dialogue i mentions a
// restaurant area, and the last turn is a thank-you.
inline Corpus uniform_corpus(std::size_t n, std::size_t turns, std::string split = "train") {
  static const char* areas[] = {"north", "south", "centre"};
  std::vector<Dialogue> dialogues;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::string, std::string>> ts;
    std::vector<std::vector<Triple>> states;
    std::vector<Triple> cur;
    for (std::size_t t = 1; t <= turns; ++t) {
      if (t == 1) {
        std::string area = areas[i % 3];
        ts.emplace_back("", "a restaurant in the " + area + " please");
        cur.emplace_back("restaurant", "area", area);
      } else if (t == 2 && turns > 2) {
        std::string food = i % 2 ? "chinese" : "italian";
        ts.emplace_back("what food ?", food + " food");
        cur.emplace_back("restaurant", "food", food);
      } else {
        ts.emplace_back("anything else ?", "no thanks");
      }
      states.push_back(cur);
    }
    dialogues.push_back(make_dialogue(split + "-" + std::to_string(i + 1), ts, states, split));
  }
  return Corpus(hotel_restaurant_ontology(), std::move(dialogues));
}

inline Corpus synthetic_corpus(std::size_t n, std::uint64_t seed = 1, std::size_t n_test = 0) {
  SyntheticSpec spec;
  spec.n_dialogues = n;
  spec.n_test = n_test;
  return generate_synthetic(spec, seed).corpus;
}

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(DSTAL_TEST_DATA) / name;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dstal-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace dstal::testing
