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


#include "support/properties.h"

#include <array>

#include "support/oracle.h"

namespace negotiate::testing {
namespace {

constexpr std::array<Channel, 4> kChannels = {
    Channel::kProposal, Channel::kLinguistic, Channel::kBoth, Channel::kNone};

}  // namespace

Action RandomAction(Rng& rng, double p_terminate) {
  Action a;
  a.terminate = rng.Uniform01() < p_terminate;
  for (int& s : a.message.symbols) s = rng.UniformInt(0, kVocabSize - 1);
  for (int& c : a.proposal.claims) c = rng.UniformInt(0, kMaxItemCount);
  return a;
}

bool SameObservation(const Observation& x, const Observation& y) {
  return x.item_context == y.item_context && x.prev_message == y.prev_message &&
         x.prev_proposal == y.prev_proposal &&
         x.proposal_is_dummy == y.proposal_is_dummy &&
         x.opponent_id == y.opponent_id;
}

OracleCheck CheckRewardOracle(int games, std::uint64_t seed) {
  Rng rng(seed);
  OracleCheck check;
  for (int g = 0; g < games; ++g) {
    const Channel channel = kChannels[rng.UniformInt(0, 3)];
    GameState state = NewGame(rng, channel);
    OracleGame oracle;
    oracle.pool = state.pool.counts;
    oracle.util_a = state.utilities[0].values;
    oracle.util_b = state.utilities[1].values;
    oracle.turn_limit = state.turn_limit;
    // Half the games use in-pool offers so that agreements are often valid.
    const bool fitting = rng.Uniform01() < 0.5;
    while (!state.over()) {
      Action a = RandomAction(rng);
      if (fitting) {
        for (int k = 0; k < kNumItems; ++k) {
          a.proposal.claims[k] = rng.UniformInt(0, state.pool.counts[k]);
        }
      }
      oracle.turns.push_back({a.terminate, a.proposal.claims});
      Step(state, a);
    }
    const RawRewards raw = ComputeRewards(state);
    const OracleRewards expected = BruteForceRewards(oracle);
    if (raw.a != static_cast<double>(expected.a) ||
        raw.b != static_cast<double>(expected.b)) {
      ++check.reward_mismatches;
    }
    const long best =
        BruteForceJointOptimum(oracle.pool, oracle.util_a, oracle.util_b);
    if (JointOptimalReward(state.pool, state.utilities[0], state.utilities[1]) !=
        static_cast<double>(best)) {
      ++check.optimum_mismatches;
    }
    const double joint = JointScore(raw, state);
    const bool at_argmax =
        best > 0 && expected.a + expected.b == best && state.terminated;
    bool ok = joint >= 0.0 && joint <= 1.0 && ((joint == 1.0) == at_argmax);
    for (Role role : {Role::kA, Role::kB}) {
      for (const RewardScheme& s :
           {RewardScheme::Selfish(), RewardScheme::Prosocial()}) {
        const double v = ScaledReward(raw, state, role, s);
        ok = ok && v >= 0.0 && v <= 1.0;
      }
    }
    if (!ok) ++check.score_violations;
    ++check.games;
  }
  return check;
}

int ChannelLeakMismatches(int pairs, std::uint64_t seed) {
  Rng rng(seed);
  int mismatches = 0;
  for (int p = 0; p < pairs; ++p) {
    const Channel channel =
        kChannels[std::array<int, 3>{0, 1, 3}[rng.UniformInt(0, 2)]];
    const std::uint64_t game_seed = rng.NextU64();
    Rng r1(game_seed), r2(game_seed);
    GameState s1 = NewGame(r1, channel);
    GameState s2 = NewGame(r2, channel);
    while (!s1.over()) {
      Action a1 = RandomAction(rng, 0.15);
      Action a2 = a1;
      if (!LinguisticChannelOpen(channel)) a2.message = RandomAction(rng).message;
      if (!ProposalChannelOpen(channel)) a2.proposal = RandomAction(rng).proposal;
      Step(s1, a1);
      Step(s2, a2);
      for (Role role : {Role::kA, Role::kB}) {
        if (!SameObservation(Observe(s1, role), Observe(s2, role))) ++mismatches;
      }
    }
    if (!s2.over()) ++mismatches;
  }
  return mismatches;
}

std::vector<double> TurnLimitFrequencies(int samples, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> freq(kMaxTurns - kMinTurns + 1, 0.0);
  for (int i = 0; i < samples; ++i) freq[SampleTurnLimit(rng) - kMinTurns] += 1.0;
  for (double& f : freq) f /= samples;
  return freq;
}

}  // namespace negotiate::testing
