#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dstal/errors.hpp"
#include "dstal/scorer.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace dstal {
namespace {

using testing::state_of;

Ontology area_ontology() {
  return Ontology({SlotSpec{DomainSlot{"restaurant", "area"}, SlotKind::closed, {"centre", "north", "south"}},
                   SlotSpec{DomainSlot{"hotel", "area"}, SlotKind::closed, {"east", "west"}}});
}

TrainingInstance instance(std::string history, DialogueState state) {
  return TrainingInstance{"d", 1, std::move(history), std::move(state)};
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  std::vector<double> s = {1000.0, 999.0, -5.0};
  auto p = softmax(s);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
  std::vector<double> shifted = {0.0, -1.0, -1005.0};
  auto q = softmax(shifted);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  EXPECT_GT(p[2], 0.0);
}

TEST(LexicalScorer, ColdIsUniformExceptNone) {
  LexicalScorer beta0(area_ontology(), LexicalScorerParams{1.0, 0.0, 1.0, 0.0});
  auto p = beta0.predict("[S] [U] anything in the centre");
  for (const auto& dist : p.per_slot) {
    for (double v : dist.probs) EXPECT_DOUBLE_EQ(v, 1.0 / static_cast<double>(dist.probs.size()));
  }

  LexicalScorer cold(area_ontology());
  auto q = cold.predict("[S] [U] anything");
  const auto& d = q.per_slot[0];
  ASSERT_EQ(d.candidates.back(), "none");
  double z = 3 * std::exp(1.0) + std::exp(3.0);
  EXPECT_NEAR(d.probs.back(), std::exp(3.0) / z, 1e-12);
  EXPECT_NEAR(d.probs[0], std::exp(1.0) / z, 1e-12);
  EXPECT_TRUE(q.argmax_state.empty());
}

TEST(LexicalScorer, SingleCountBookkeeping) {
  LexicalScorer s(area_ontology());
  std::vector<TrainingInstance> one = {
      instance("[S] [U] a restaurant in the centre", state_of({{"restaurant", "area", "centre"}}))};
  s.train(one);
  EXPECT_EQ(s.count("centre", DomainSlot{"restaurant", "area"}, "centre"), 1u);
  EXPECT_EQ(s.count("north", DomainSlot{"restaurant", "area"}, "centre"), 0u);
  EXPECT_EQ(s.none_count(DomainSlot{"hotel", "area"}), 1u);
  EXPECT_EQ(s.none_count(DomainSlot{"restaurant", "area"}), 0u);
  EXPECT_EQ(s.instances_seen(), 1u);
}

TEST(LexicalScorer, HandComputedArgmax) {
  LexicalScorer s(area_ontology());
  std::vector<TrainingInstance> one = {
      instance("[S] [U] a restaurant in the centre", state_of({{"restaurant", "area", "centre"}}))};
  s.train(one);
  // Distinct tokens shared with the training history: s, u, in, the, centre.
  auto p = s.predict("[S] [U] somewhere in the centre please");
  const auto& area = p.per_slot[0];
  EXPECT_EQ(area.scores, (std::vector<double>{6.0, 1.0, 1.0, 3.0}));
  EXPECT_EQ(area.candidates[area.argmax()], "centre");
  EXPECT_EQ(*p.argmax_state.get(DomainSlot{"restaurant", "area"}), "centre");
  // No hotel value is mentioned: alpha for each value against alpha + beta.
  EXPECT_EQ(p.per_slot[1].scores, (std::vector<double>{1.0, 1.0, 3.0}));
  EXPECT_FALSE(p.argmax_state.contains(DomainSlot{"hotel", "area"}));
}

TEST(LexicalScorer, MatchesTheBruteForceScoreDefinition) {
  auto onto = testing::hotel_restaurant_ontology();
  std::mt19937_64 rng(7);
  const std::vector<std::string> words = {"north", "south", "centre", "cheap", "expensive", "chinese",
                                          "italian", "hotel", "restaurant", "please", "the", "in", "a"};
  auto sentence = [&] {
    std::string s = "[S] [U]";
    for (int i = 0; i < 6; ++i) s += " " + words[rng() % words.size()];
    return s;
  };
  for (int trial = 0; trial < 30; ++trial) {
    LexicalScorerParams params{1.0 + static_cast<double>(rng() % 3), static_cast<double>(rng() % 4), 1.0,
                               static_cast<double>(rng() % 3)};
    LexicalScorer scorer(onto, params);
    std::vector<TrainingInstance> train;
    std::vector<testing::OracleInstance> oracle_train;
    for (int i = 0; i < 12; ++i) {
      DialogueState st;
      for (std::size_t j = 0; j < onto.size(); ++j) {
        const auto& vals = onto.spec(j).values;
        std::size_t pick = rng() % (vals.size() + 1);
        if (pick < vals.size()) st.set(onto.slot(j), vals[pick]);
      }
      auto h = sentence();
      train.push_back(instance(h, st));
      oracle_train.push_back({h, st});
    }
    scorer.train(train);
    for (int q = 0; q < 5; ++q) {
      auto h = sentence();
      auto expected = testing::oracle_lexical_scores(onto, oracle_train, h, params.smoothing, params.none_prior,
                                                     params.match_bonus);
      auto got = scorer.predict(h);
      for (std::size_t j = 0; j < onto.size(); ++j) EXPECT_EQ(got.per_slot[j].scores, expected[j]) << h;
    }
  }
}

TEST(LexicalScorer, MatchingIsTokenAligned) {
  Ontology onto({SlotSpec{DomainSlot{"hotel", "name"}, SlotKind::closed, {"ely", "kings lynn"}}});
  LexicalScorer s(onto, LexicalScorerParams{1.0, 2.0, 1.0, 5.0});
  auto p = s.predict("[S] [U] i like jelly and kings, lynn");
  // "ely" inside "jelly" is not a mention; "kings, lynn" is.
  EXPECT_EQ(p.per_slot[0].scores, (std::vector<double>{1.0, 6.0, 3.0}));
}

TEST(LexicalScorer, OpenTimeSlotsProposeHistoryTimes) {
  Ontology onto({SlotSpec{DomainSlot{"train", "arriveby"}, SlotKind::open_time, {}}});
  LexicalScorer s(onto);
  std::vector<TrainingInstance> train = {
      instance("[S] [U] arrive by 10:15", state_of({{"train", "arriveby", "10:15"}}))};
  s.train(train);
  auto p = s.predict("[S] [U] arrive by 09:30 or 10:15");
  const auto& d = p.per_slot[0];
  EXPECT_EQ(d.candidates, (std::vector<std::string>{"09:30", "10:15", "none"}));
  EXPECT_EQ(*p.argmax_state.get(DomainSlot{"train", "arriveby"}), "10:15");
}

TEST(LexicalScorer, OpenFreeSlotsLearnValues) {
  Ontology onto({SlotSpec{DomainSlot{"train", "destination"}, SlotKind::open_free, {"ely"}}});
  LexicalScorer s(onto);
  std::vector<TrainingInstance> train = {
      instance("[S] [U] to kings lynn", state_of({{"train", "destination", "kings lynn"}}))};
  s.train(train);
  auto p = s.predict("[S] [U] a train to kings lynn");
  EXPECT_EQ(p.per_slot[0].candidates, (std::vector<std::string>{"ely", "kings lynn", "none"}));
  EXPECT_EQ(*p.argmax_state.get(DomainSlot{"train", "destination"}), "kings lynn");
}

TEST(LexicalScorer, TrainingRejectsOffOntologyValues) {
  LexicalScorer s(area_ontology());
  std::vector<TrainingInstance> bad = {
      instance("[S] [U] x", state_of({{"restaurant", "area", "centre"}})),
      instance("[S] [U] y", state_of({{"restaurant", "area", "purple"}}))};
  EXPECT_THROW(s.train(bad), ValidationError);
  EXPECT_EQ(s.instances_seen(), 0u);  // validated before any update
}

TEST(LexicalScorer, RetrainFromScratchIsBitwiseIdentical) {
  auto corpus = testing::synthetic_corpus(50, 3);
  std::vector<TrainingInstance> train;
  for (const auto& d : corpus.dialogues()) {
    auto part = make_instances(d, InstanceMode::last_turn());
    train.insert(train.end(), part.begin(), part.end());
  }
  LexicalScorer a(corpus.ontology());
  a.train(train);
  LexicalScorer b(corpus.ontology());
  b.train(std::span(train).first(10));
  b.reinitialize();
  EXPECT_EQ(b.snapshot(), LexicalScorer(corpus.ontology()).snapshot());
  b.train(train);
  EXPECT_EQ(a.snapshot().dump(), b.snapshot().dump());
}

TEST(LexicalScorer, SnapshotRoundTripPreservesPredictions) {
  auto corpus = testing::synthetic_corpus(30, 5);
  std::vector<TrainingInstance> train;
  for (const auto& d : corpus.dialogues()) {
    auto part = make_instances(d, InstanceMode::full());
    train.insert(train.end(), part.begin(), part.end());
  }
  LexicalScorer a(corpus.ontology(), LexicalScorerParams{0.5, 3.0, 2.0, 1.0});
  a.train(train);
  auto b = LexicalScorer::from_snapshot(corpus.ontology(), a.snapshot());
  EXPECT_EQ(b.snapshot().dump(), a.snapshot().dump());
  for (const auto& d : corpus.dialogues()) {
    for (std::size_t t = 1; t <= d.turn_count(); ++t) {
      auto h = build_history(d, t);
      auto pa = a.predict(h);
      auto pb = b.predict(h);
      ASSERT_EQ(pa.per_slot.size(), pb.per_slot.size());
      for (std::size_t j = 0; j < pa.per_slot.size(); ++j) {
        EXPECT_EQ(pa.per_slot[j].candidates, pb.per_slot[j].candidates);
        EXPECT_EQ(pa.per_slot[j].scores, pb.per_slot[j].scores);
      }
    }
  }
}

TEST(LexicalScorer, PredictionInvariantsHoldOnRandomHistories) {
  auto corpus = testing::synthetic_corpus(40, 11);
  LexicalScorer s(corpus.ontology());
  std::vector<TrainingInstance> train;
  for (const auto& d : corpus.dialogues()) {
    auto part = make_instances(d, InstanceMode::full());
    train.insert(train.end(), part.begin(), part.end());
  }
  s.train(train);
  for (const auto& d : corpus.dialogues()) {
    for (std::size_t t = 1; t <= d.turn_count(); ++t) {
      auto p = s.predict(build_history(d, t));
      ASSERT_EQ(p.per_slot.size(), corpus.ontology().size());
      for (std::size_t j = 0; j < p.per_slot.size(); ++j) {
        const auto& dist = p.per_slot[j];
        EXPECT_EQ(dist.slot, corpus.ontology().slot(j));
        EXPECT_EQ(dist.candidates.back(), "none");
        double sum = 0;
        for (double v : dist.probs) {
          EXPECT_GT(v, 0.0);
          sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
        auto chosen = dist.candidates[dist.argmax()];
        auto got = p.argmax_state.get(dist.slot);
        if (chosen == "none") {
          EXPECT_FALSE(got);
        } else {
          EXPECT_EQ(*got, chosen);
        }
      }
    }
  }
}

TEST(LexicalScorer, ParamsValidateTemperature) {
  EXPECT_THROW(LexicalScorerParams::from_json(json{{"temperature", 0.0}}), ValidationError);
  auto p = LexicalScorerParams::from_json(json{{"none_prior", 12.0}, {"match_bonus", 11.0}});
  EXPECT_EQ(p.none_prior, 12.0);
  EXPECT_EQ(LexicalScorerParams::from_json(p.to_json()).match_bonus, 11.0);
}

TEST(LexicalScorer, CloneUntrainedKeepsParams) {
  LexicalScorer s(area_ontology(), LexicalScorerParams{2.0, 4.0, 1.5, 0.5});
  std::vector<TrainingInstance> one = {instance("[S] [U] centre", state_of({{"restaurant", "area", "centre"}}))};
  s.train(one);
  auto fresh = s.clone_untrained();
  auto* lex = dynamic_cast<LexicalScorer*>(fresh.get());
  ASSERT_NE(lex, nullptr);
  EXPECT_EQ(lex->instances_seen(), 0u);
  EXPECT_EQ(lex->params().none_prior, 4.0);
}

}  // namespace
}  // namespace dstal
