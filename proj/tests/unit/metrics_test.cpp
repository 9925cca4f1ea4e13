#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dstal/errors.hpp"
#include "dstal/metrics.hpp"
#include "support/fixtures.hpp"

namespace dstal {
namespace {

using testing::state_of;

Ontology wide_ontology(std::size_t J) {
  std::vector<SlotSpec> specs;
  for (std::size_t j = 0; j < J; ++j) {
    specs.push_back(SlotSpec{DomainSlot{"d", "s" + std::to_string(j)}, SlotKind::closed, {"a", "b"}});
  }
  return Ontology(std::move(specs));
}

TEST(JointGoalAccuracy, Definitions) {
  std::vector<DialogueState> gold = {state_of({{"hotel", "area", "north"}}),
                                     state_of({{"hotel", "area", "north"}, {"hotel", "pricerange", "cheap"}}),
                                     state_of({{"restaurant", "food", "chinese"}}), DialogueState{}};
  EXPECT_EQ(joint_goal_accuracy(gold, gold), 1.0);

  std::vector<DialogueState> pred = {state_of({{"hotel", "area", "north"}}),
                                     state_of({{"hotel", "area", "north"}}),
                                     DialogueState{},
                                     state_of({{"hotel", "area", "south"}})};
  EXPECT_EQ(joint_goal_accuracy(pred, gold), 0.25);
}

TEST(JointGoalAccuracy, ValuesCompareNormalized) {
  DialogueState gold = state_of({{"hotel", "area", "north"}, {"hotel", "pricerange", "cheap"}});
  DialogueState pred;
  pred.set(DomainSlot{"hotel", "area"}, "North");
  pred.set(DomainSlot{"hotel", "pricerange"}, " CHEAP ");
  std::vector<DialogueState> g = {gold};
  std::vector<DialogueState> p = {pred};
  EXPECT_EQ(joint_goal_accuracy(p, g), 1.0);
}

TEST(JointGoalAccuracy, RejectsEmptyAndMismatchedInput) {
  std::vector<DialogueState> none;
  std::vector<DialogueState> one(1);
  EXPECT_THROW(joint_goal_accuracy(none, none), RangeError);
  EXPECT_THROW(joint_goal_accuracy(none, one), ValidationError);
}

TEST(SlotAccuracy, Definitions) {
  auto onto = wide_ontology(30);
  std::vector<DialogueState> gold = {state_of({{"d", "s0", "a"}, {"d", "s1", "b"}})};
  EXPECT_EQ(slot_accuracy(gold, gold, onto), 1.0);
  std::vector<DialogueState> pred = {state_of({{"d", "s0", "a"}, {"d", "s1", "a"}})};
  EXPECT_NEAR(slot_accuracy(pred, gold, onto), 29.0 / 30.0, 1e-12);
  std::vector<DialogueState> empty(1);
  EXPECT_EQ(slot_accuracy(empty, empty, onto), 1.0);
}

TEST(SlotAccuracy, BoundsJointGoalAccuracyOnRandomStates) {
  auto onto = wide_ontology(5);
  std::mt19937_64 rng(12);
  auto random_state = [&] {
    DialogueState s;
    for (std::size_t j = 0; j < 5; ++j) {
      auto r = rng() % 3;
      if (r < 2) s.set(onto.slot(j), r ? "a" : "b");
    }
    return s;
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DialogueState> p, g;
    for (int i = 0; i < 8; ++i) {
      p.push_back(random_state());
      g.push_back(rng() % 2 ? p.back() : random_state());
    }
    double jga = joint_goal_accuracy(p, g);
    double sa = slot_accuracy(p, g, onto);
    EXPECT_LE(jga, sa + 1e-12);
    EXPECT_GE(jga, 0.0);
    EXPECT_LE(sa, 1.0);
  }
}

TEST(Evaluate, OverPredictionsAndScopes) {
  auto corpus = testing::uniform_corpus(6, 3);
  LexicalScorer scorer(corpus.ontology());
  std::vector<TrainingInstance> train;
  for (const auto& d : corpus.dialogues()) {
    auto part = make_instances(d, InstanceMode::full());
    train.insert(train.end(), part.begin(), part.end());
  }
  scorer.train(train);
  auto idx = corpus.split_indices("train");
  auto all = evaluate(scorer, corpus, idx, EvalScope::all_turns);
  auto last = evaluate(scorer, corpus, idx, EvalScope::last_turn);
  EXPECT_EQ(all.n_turns, 18u);
  EXPECT_EQ(last.n_turns, 6u);

  // The same numbers from explicit prediction lists.
  std::vector<DialogueState> pred, gold;
  for (auto i : idx) {
    const auto& d = corpus.at(i);
    for (std::size_t t = 1; t <= d.turn_count(); ++t) {
      pred.push_back(scorer.predict(build_history(d, t)).argmax_state);
      gold.push_back(d.gold(t));
    }
  }
  EXPECT_EQ(all.jga, joint_goal_accuracy(pred, gold));
  EXPECT_EQ(all.slot_accuracy, slot_accuracy(pred, gold, corpus.ontology()));
}

TEST(ReadingCost, Identities) {
  std::vector<TurnSelection> last = {{4, 4}, {7, 7}, {1, 1}, {12, 12}};
  auto rc = reading_cost(last);
  EXPECT_EQ(rc.mean, 1.0);
  EXPECT_EQ(rc.percent(), 100.0);
  EXPECT_EQ(rc.stddev, 0.0);

  std::vector<TurnSelection> half = {{5, 10}};
  EXPECT_EQ(reading_cost(half).mean, 0.5);
  std::vector<TurnSelection> pair = {{1, 4}, {3, 4}};
  auto p = reading_cost(pair);
  EXPECT_EQ(p.mean, 0.5);
  EXPECT_NEAR(p.stddev, 0.25, 1e-15);
  EXPECT_EQ(p.n, 2u);
}

TEST(ReadingCost, MatchesTheDefinitionOnRandomSets) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TurnSelection> sel;
    long double sum = 0;
    std::size_t n = 1 + rng() % 50;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t T = 1 + rng() % 22;
      std::size_t t = 1 + rng() % T;
      sel.push_back({t, T});
      sum += static_cast<long double>(t) / static_cast<long double>(T);
    }
    auto rc = reading_cost(sel);
    EXPECT_NEAR(rc.mean, static_cast<double>(sum / n), 1e-12);
    EXPECT_GT(rc.mean, 0.0);
    EXPECT_LE(rc.mean, 1.0);
  }
}

TEST(ReadingCost, RejectsBadSelections) {
  std::vector<TurnSelection> none;
  EXPECT_THROW(reading_cost(none), RangeError);
  std::vector<TurnSelection> beyond = {{5, 4}};
  EXPECT_THROW(reading_cost(beyond), RangeError);
  std::vector<TurnSelection> zero = {{0, 4}};
  EXPECT_THROW(reading_cost(zero), RangeError);
}

TEST(AnnotationCost, WorkedExample) {
  CostParams p{1.0, 2.0, 1.0, 6, 3};
  EXPECT_EQ(annotation_cost(p, CostMethod::full_dialogue), 18.0);
  EXPECT_EQ(annotation_cost(p, CostMethod::last_turn), 8.0);
  EXPECT_EQ(annotation_cost(p, CostMethod::selected_turn), 5.0);
  p.dollars_per_minute = 0.0;
  for (auto m : {CostMethod::full_dialogue, CostMethod::last_turn, CostMethod::selected_turn}) {
    EXPECT_EQ(annotation_cost(p, m), 0.0);
  }
}

TEST(AnnotationCost, OrderingAndEqualityCases) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    CostParams p;
    p.read_minutes = u(rng);
    p.annotate_minutes = u(rng);
    p.dollars_per_minute = u(rng);
    p.turn_count = 1 + rng() % 30;
    p.selected_turn = 1 + rng() % p.turn_count;
    double full = annotation_cost(p, CostMethod::full_dialogue);
    double last = annotation_cost(p, CostMethod::last_turn);
    double sel = annotation_cost(p, CostMethod::selected_turn);
    ASSERT_LE(sel, last);
    ASSERT_LE(last, full);
  }
  CostParams at_end{1.5, 2.5, 3.0, 9, 9};
  EXPECT_EQ(annotation_cost(at_end, CostMethod::selected_turn), annotation_cost(at_end, CostMethod::last_turn));
  CostParams single{1.5, 2.5, 3.0, 1, 1};
  EXPECT_EQ(annotation_cost(single, CostMethod::full_dialogue), annotation_cost(single, CostMethod::last_turn));
  EXPECT_EQ(annotation_cost(single, CostMethod::last_turn), annotation_cost(single, CostMethod::selected_turn));

  CostParams bad{1, 1, 1, 3, 4};
  EXPECT_THROW(annotation_cost(bad, CostMethod::selected_turn), RangeError);
}

TEST(Csv, FixedFormatting) {
  EXPECT_EQ(format_number(0.5), "0.500000");
  EXPECT_EQ(format_number(100.0), "100.000000");
  std::vector<MetricRow> rows = {{"jga", 0.25, 0.01, 5}, {"rc", 0.5, 0.0, 3}};
  std::ostringstream os;
  write_metric_csv(os, rows);
  EXPECT_EQ(os.str(), "metric,value,stddev,n\njga,0.250000,0.010000,5\nrc,0.500000,0.000000,3\n");
}

TEST(MeanStd, Population) {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  auto m = mean_std(v);
  EXPECT_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stddev, std::sqrt(1.25), 1e-15);
}

}  // namespace
}  // namespace dstal
