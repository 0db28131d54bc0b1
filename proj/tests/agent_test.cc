// Copyright 2026 The Negotiate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "negotiate/agent.h"
#include "negotiate/env.h"
#include "negotiate/rng.h"

namespace negotiate {
namespace {

using diff::Tape;

AgentConfig Small() {
  AgentConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 8;
  c.id_embed_dim = 4;
  return c;
}

std::vector<Observation> RandomObservations(int n, std::uint64_t seed,
                                            int ids = 0) {
  Rng rng(seed);
  std::vector<Observation> obs(n);
  for (Observation& o : obs) {
    for (int k = 0; k < kNumItems; ++k) {
      o.item_context[k] = rng.UniformInt(0, 5);
      o.item_context[kNumItems + k] = rng.UniformInt(0, 10);
    }
    for (int& s : o.prev_message.symbols) s = rng.UniformInt(0, 10);
    o.proposal_is_dummy = rng.Uniform01() < 0.5;
    if (!o.proposal_is_dummy) {
      for (int& c : o.prev_proposal.claims) c = rng.UniformInt(0, 5);
    }
    if (ids > 0) o.opponent_id = rng.UniformInt(0, ids - 1);
  }
  return obs;
}

struct Sampler {
  explicit Sampler(int n, std::uint64_t seed) {
    for (int i = 0; i < n; ++i) {
      rngs.push_back(std::make_unique<Rng>(MixSeed(seed, i)));
      ptrs.push_back(rngs.back().get());
    }
  }
  ActOptions Options() const {
    ActOptions o;
    o.mode = ActMode::kSample;
    o.rngs = ptrs;
    return o;
  }
  std::vector<std::unique_ptr<Rng>> rngs;
  std::vector<Rng*> ptrs;
};

TEST(AgentTest, ParameterShapesAtFullSize) {
  Agent<float> agent(AgentConfig{}, 1);
  EXPECT_EQ(agent.combiner_input_dim(), 300);
  const int E = 100, H = 100;
  const std::int64_t lstm = 4 * H * E + 4 * H * H + 4 * H;
  const std::int64_t expected = 11 * E + 11 * E + 4 * lstm + (3 * H * H + H) +
                                (H + 1) + 3 * (6 * H + 6) + (11 * H + 11);
  EXPECT_EQ(agent.params().NumScalars(), expected);
  EXPECT_EQ(agent.params().Find("opponent_ids"), nullptr);
  ASSERT_NE(agent.params().Find("encoder_msg/w_ih"), nullptr);
}

TEST(AgentTest, IdTableWidensTheCombiner) {
  AgentConfig c;
  c.num_opponent_ids = 10;
  Agent<float> agent(c, 1);
  EXPECT_EQ(agent.combiner_input_dim(), 400);
  const diff::Parameter<float>* ids = agent.params().Find("opponent_ids");
  ASSERT_NE(ids, nullptr);
  EXPECT_EQ(ids->value.rows(), 10);
  EXPECT_EQ(ids->value.cols(), 100);
}

TEST(AgentTest, SameSeedSameParameters) {
  Agent<float> a(Small(), 42), b(Small(), 42), c(Small(), 43);
  auto ib = b.params().begin();
  bool any_diff = false;
  auto ic = c.params().begin();
  for (const auto& p : a.params()) {
    EXPECT_EQ(p.value, ib->value) << p.name;
    any_diff = any_diff || p.value != ic->value;
    ++ib;
    ++ic;
  }
  EXPECT_TRUE(any_diff);
}

TEST(AgentTest, ActionsAreInRangeAndValuesBounded) {
  Agent<double> agent(Small(), 3);
  const auto obs = RandomObservations(16, 5);
  Sampler s(16, 9);
  Tape<double> tape(false);
  const BatchAct<double> act = agent.Act(tape, obs, s.Options());
  ASSERT_EQ(act.actions.size(), 16u);
  for (std::size_t b = 0; b < 16; ++b) {
    for (int c : act.actions[b].proposal.claims) {
      EXPECT_GE(c, 0);
      EXPECT_LE(c, 5);
    }
    for (int sym : act.actions[b].message.symbols) {
      EXPECT_GE(sym, 0);
      EXPECT_LT(sym, kVocabSize);
    }
    EXPECT_LE(act.log_prob[b].total(), 0.0);
    EXPECT_GE(act.entropy[b].term, 0.0);
    EXPECT_LE(act.entropy[b].term, std::log(2.0) + 1e-12);
    EXPECT_LE(act.entropy[b].prop, 3 * std::log(6.0) + 1e-12);
    EXPECT_LE(act.entropy[b].utt, 6 * std::log(11.0) + 1e-12);
  }
  EXPECT_EQ(act.heads.utt.size(), static_cast<std::size_t>(kUtteranceLength));
}

TEST(AgentTest, SamplingIsReproducible) {
  Agent<float> agent(Small(), 3);
  const auto obs = RandomObservations(8, 5);
  Sampler s1(8, 9), s2(8, 9);
  Tape<float> t1(false), t2(false);
  const auto a1 = agent.Act(t1, obs, s1.Options());
  const auto a2 = agent.Act(t2, obs, s2.Options());
  for (int b = 0; b < 8; ++b) {
    EXPECT_EQ(a1.actions[b].terminate, a2.actions[b].terminate);
    EXPECT_EQ(a1.actions[b].proposal, a2.actions[b].proposal);
    EXPECT_EQ(a1.actions[b].message, a2.actions[b].message);
  }
}

TEST(AgentTest, ReplayReproducesLogProbabilities) {
  Agent<double> agent(Small(), 3);
  const auto obs = RandomObservations(8, 5);
  Sampler s(8, 1);
  Tape<double> t1(false), t2(false);
  const auto sampled = agent.Act(t1, obs, s.Options());
  ActOptions replay;
  replay.mode = ActMode::kReplay;
  replay.replay = sampled.actions;
  const auto again = agent.Act(t2, obs, replay);
  for (int b = 0; b < 8; ++b) {
    EXPECT_EQ(again.actions[b].message, sampled.actions[b].message);
    EXPECT_NEAR(again.log_prob[b].total(), sampled.log_prob[b].total(), 1e-12);
    EXPECT_NEAR(again.entropy[b].utt, sampled.entropy[b].utt, 1e-12);
  }
}

TEST(AgentTest, GreedyPicksTheMode) {
  Agent<double> agent(Small(), 3);
  const auto obs = RandomObservations(4, 5);
  ActOptions greedy;
  greedy.mode = ActMode::kGreedy;
  Tape<double> tape(false);
  const auto act = agent.Act(tape, obs, greedy);
  Tape<double> t2(false);
  const auto again = agent.Act(t2, obs, greedy);
  for (int b = 0; b < 4; ++b) {
    EXPECT_EQ(act.actions[b].proposal, again.actions[b].proposal);
    // Every greedy choice is at least as likely as a uniform one.
    EXPECT_GE(act.log_prob[b].prop, 3 * std::log(1.0 / 6) - 1e-12);
    EXPECT_GE(act.log_prob[b].term, std::log(0.5) - 1e-12);
  }
}

TEST(AgentTest, SkippingTheUtteranceLeavesDummyMessages) {
  Agent<float> agent(Small(), 3);
  const auto obs = RandomObservations(4, 5);
  Sampler s(4, 2);
  ActOptions o = s.Options();
  o.decode_utterance = false;
  Tape<float> tape(false);
  const auto act = agent.Act(tape, obs, o);
  EXPECT_TRUE(act.heads.utt.empty());
  for (int b = 0; b < 4; ++b) {
    EXPECT_EQ(act.actions[b].message, Message{});
    EXPECT_EQ(act.log_prob[b].utt, 0.0f);
  }
}

TEST(AgentTest, DummySymbolCanBeExcluded) {
  AgentConfig c = Small();
  c.allow_dummy_symbol = false;
  Agent<float> agent(c, 3);
  const auto obs = RandomObservations(64, 5);
  Sampler s(64, 2);
  Tape<float> tape(false);
  const auto act = agent.Act(tape, obs, s.Options());
  for (const Action& a : act.actions) {
    for (int sym : a.message.symbols) EXPECT_NE(sym, kDummySymbol);
  }
}

TEST(AgentTest, VariableLengthUtterancesStopAtTheDummySymbol) {
  AgentConfig c = Small();
  c.variable_length_utterances = true;
  Agent<float> agent(c, 3);
  const auto obs = RandomObservations(64, 5);
  Sampler s(64, 2);
  Tape<float> tape(false);
  const auto act = agent.Act(tape, obs, s.Options());
  int stopped = 0;
  for (std::size_t b = 0; b < act.actions.size(); ++b) {
    const auto& sym = act.actions[b].message.symbols;
    for (int k = 0; k < kUtteranceLength; ++k) {
      if (sym[k] != kDummySymbol) continue;
      ++stopped;
      for (int j = k + 1; j < kUtteranceLength; ++j) EXPECT_EQ(sym[j], kDummySymbol);
      for (std::size_t pos = k + 1; pos < act.heads.utt_active.size(); ++pos) {
        EXPECT_FALSE(act.heads.utt_active[pos][b]);
      }
      break;
    }
  }
  EXPECT_GT(stopped, 0);
}

TEST(AgentTest, DummyProposalLooksLikeAllZeros) {
  Agent<double> agent(Small(), 3);
  Observation dummy = RandomObservations(1, 5)[0];
  dummy.proposal_is_dummy = true;
  dummy.prev_proposal = MakeProposal({4, 4, 4});
  Observation zeros = dummy;
  zeros.proposal_is_dummy = false;
  zeros.prev_proposal = Proposal{};
  Tape<double> tape(false);
  const diff::Var h1 = agent.Encode(tape, std::vector<Observation>{dummy});
  const diff::Var h2 = agent.Encode(tape, std::vector<Observation>{zeros});
  EXPECT_EQ(tape.value(h1), tape.value(h2));
}

TEST(AgentTest, ReusedContextGivesTheSameEncoding) {
  Agent<double> agent(Small(), 3);
  const auto obs = RandomObservations(6, 5);
  Tape<double> tape(false);
  const diff::Var ctx = agent.EncodeContexts(tape, obs);
  const diff::Var h1 = agent.Encode(tape, obs, ctx);
  const diff::Var h2 = agent.Encode(tape, obs);
  EXPECT_EQ(tape.value(h1), tape.value(h2));
}

TEST(AgentTest, BatchingDoesNotChangeColumns) {
  Agent<double> agent(Small(), 3);
  const auto obs = RandomObservations(5, 8);
  Tape<double> tape(false);
  const diff::Var all = agent.Encode(tape, obs);
  for (int b = 0; b < 5; ++b) {
    const diff::Var one =
        agent.Encode(tape, std::vector<Observation>{obs[b]});
    EXPECT_LT((tape.value(one).col(0) - tape.value(all).col(b)).norm(), 1e-12);
  }
}

TEST(AgentTest, OpponentIdsChangeTheHiddenState) {
  AgentConfig c = Small();
  c.num_opponent_ids = 3;
  Agent<double> agent(c, 3);
  auto obs = RandomObservations(1, 5, 3);
  obs[0].opponent_id = 0;
  auto other = obs;
  other[0].opponent_id = 2;
  Tape<double> tape(false);
  const auto h1 = agent.Encode(tape, obs);
  const auto h2 = agent.Encode(tape, other);
  EXPECT_NE(tape.value(h1), tape.value(h2));
  const std::vector<int> bad = {3};
  EXPECT_THROW(agent.OpponentEmbedding(tape, bad), std::out_of_range);
  obs[0].opponent_id.reset();
  EXPECT_THROW(agent.Encode(tape, obs), std::invalid_argument);
}

TEST(AgentTest, IdsDisabledThrows) {
  Agent<double> agent(Small(), 3);
  Tape<double> tape(false);
  const std::vector<int> ids = {0};
  EXPECT_THROW(agent.OpponentEmbedding(tape, ids), std::logic_error);
}

TEST(AgentTest, BadConfigThrows) {
  AgentConfig c = Small();
  c.hidden_dim = 0;
  EXPECT_THROW(Agent<float>(c, 1), std::invalid_argument);
}

TEST(AgentTest, ZeroWeightsGiveReluOfTheCombinerBias) {
  Agent<double> agent(Small(), 3);
  for (auto& p : agent.params()) p.value.setZero();
  diff::Parameter<double>* bias = agent.params().Find("combiner/b");
  ASSERT_NE(bias, nullptr);
  for (int i = 0; i < bias->value.rows(); ++i) bias->value(i, 0) = i % 2 ? 0.5 : -0.5;
  Tape<double> tape(false);
  const auto h = agent.Encode(tape, RandomObservations(3, 1));
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < bias->value.rows(); ++i) {
      EXPECT_EQ(tape.value(h)(i, b), i % 2 ? 0.5 : 0.0);
    }
  }
}

TEST(AgentTest, SampledTerminationFollowsTheSigmoid) {
  Agent<double> agent(Small(), 3);
  diff::Parameter<double>* bias = agent.params().Find("term/b");
  ASSERT_NE(bias, nullptr);
  bias->value(0, 0) = 0.8;
  constexpr int kDraws = 10000;
  const std::vector<Observation> obs(kDraws, RandomObservations(1, 4)[0]);
  Sampler s(kDraws, 6);
  ActOptions o = s.Options();
  o.decode_utterance = false;
  Tape<double> tape(false);
  const auto act = agent.Act(tape, obs, o);
  const double p_term = std::exp(act.log_prob[0].term);
  const double p = act.actions[0].terminate ? p_term : 1.0 - p_term;
  int hits = 0;
  for (const Action& a : act.actions) hits += a.terminate;
  EXPECT_NEAR(static_cast<double>(hits) / kDraws, p, 0.02);
}

TEST(AgentTest, IdGradientReachesOnlyTheUsedRow) {
  AgentConfig c = Small();
  c.num_opponent_ids = 4;
  Agent<double> agent(c, 3);
  auto obs = RandomObservations(2, 5, 4);
  obs[0].opponent_id = 2;
  obs[1].opponent_id = 2;
  Tape<double> tape;
  const auto act = agent.Act(tape, obs, Sampler(2, 1).Options());
  const std::vector<double> coef = {1.0, -0.5};
  for (const diff::HeadId& id : act.heads.prop) tape.SetHeadCoefficients(id, coef, coef);
  agent.params().ZeroGrad();
  tape.Backward();
  const auto& g = agent.params().Find("opponent_ids")->grad;
  EXPECT_GT(g.row(2).norm(), 0.0);
  for (int r : {0, 1, 3}) EXPECT_EQ(g.row(r).norm(), 0.0);
}

}  // namespace
}  // namespace negotiate
