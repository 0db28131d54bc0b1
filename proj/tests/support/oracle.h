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

// Reference computations written from the game rules alone, without the
// library's reward code, for cross-checking.

#ifndef NEGOTIATE_TESTS_SUPPORT_ORACLE_H_
#define NEGOTIATE_TESTS_SUPPORT_ORACLE_H_

#include <array>
#include <cstdint>
#include <vector>

namespace negotiate::testing {

using Triple = std::array<int, 3>;

struct OracleTurn {
  bool terminate = false;
  Triple proposal{};
};

struct OracleGame {
  Triple pool{};
  Triple util_a{};
  Triple util_b{};
  int turn_limit = 10;
  std::vector<OracleTurn> turns;  // turn t is turns[t - 1]; A acts on odd t
};

struct OracleRewards {
  long a = 0;
  long b = 0;
};

// Replays the transcript turn by turn: the first termination at t >= 2
// accepts the proposal of turn t - 1.
OracleRewards BruteForceRewards(const OracleGame& game);

// Maximum of R_A + R_B over every division of the pool, 6^3 candidates for
// A's share, skipping those that do not fit the pool.
long BruteForceJointOptimum(const Triple& pool, const Triple& util_a,
                            const Triple& util_b);

// Poisson(mean) pmf restricted to [lo, hi] and renormalised; index k - lo.
std::vector<double> TruncatedPoissonPmf(double mean, int lo, int hi);

}  // namespace negotiate::testing

#endif  // NEGOTIATE_TESTS_SUPPORT_ORACLE_H_
