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


// Randomised whole-game checks of the environment, shared by the unit tests
// and the acceptance run.

#ifndef NEGOTIATE_TESTS_SUPPORT_PROPERTIES_H_
#define NEGOTIATE_TESTS_SUPPORT_PROPERTIES_H_

#include <cstdint>
#include <vector>

#include "negotiate/agent.h"
#include "negotiate/env.h"
#include "negotiate/rng.h"

namespace negotiate::testing {

// Uniformly random action; terminates with probability `p_terminate`.
Action RandomAction(Rng& rng, double p_terminate = 0.25);

bool SameObservation(const Observation& x, const Observation& y);

struct OracleCheck {
  int games = 0;
  int reward_mismatches = 0;
  int optimum_mismatches = 0;
  int score_violations = 0;  // out of [0, 1], or joint score 1 off the argmax
};

// Plays random games on random channels and compares rewards and the joint
// optimum with the brute-force oracle.
OracleCheck CheckRewardOracle(int games, std::uint64_t seed);

// Plays pairs of games with the same seed and actions except for the content
// of the closed channel(s), and counts turns at which an observation of
// either agent differs. Every pair uses a channel with something closed.
int ChannelLeakMismatches(int pairs, std::uint64_t seed);

// Empirical frequency of each turn limit 4..10; index limit - 4.
std::vector<double> TurnLimitFrequencies(int samples, std::uint64_t seed);

}  // namespace negotiate::testing

#endif  // NEGOTIATE_TESTS_SUPPORT_PROPERTIES_H_
