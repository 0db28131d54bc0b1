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

// Rules of the item-division negotiation game: sampling of pools,
// utilities and horizons, turn alternation, channel masking, termination
// and reward computation.

#ifndef NEGOTIATE_ENV_H_
#define NEGOTIATE_ENV_H_

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "negotiate/rng.h"

namespace negotiate {

inline constexpr int kNumItems = 3;
inline constexpr int kMaxItemCount = 5;
inline constexpr int kMaxUtility = 10;
inline constexpr int kVocabSize = 11;
inline constexpr int kUtteranceLength = 6;
inline constexpr int kDummySymbol = 0;
inline constexpr int kMinTurns = 4;
inline constexpr int kMaxTurns = 10;
inline constexpr double kTurnLimitMean = 7.0;

using ItemVector = std::array<int, kNumItems>;

struct ItemPool {
  ItemVector counts{};
  friend bool operator==(const ItemPool&, const ItemPool&) = default;
};

struct Utilities {
  ItemVector values{};
  friend bool operator==(const Utilities&, const Utilities&) = default;
};

// Items the proposer claims for itself. Each claim is in {0..5}; whether the
// claim fits the pool is only checked when the proposal is accepted.
struct Proposal {
  ItemVector claims{};
  friend bool operator==(const Proposal&, const Proposal&) = default;
};

struct Message {
  std::array<int, kUtteranceLength> symbols{};  // all kDummySymbol
  friend bool operator==(const Message&, const Message&) = default;
};

// Checked constructors; throw std::invalid_argument on out-of-range input.
ItemPool MakeItemPool(const ItemVector& counts);
Utilities MakeUtilities(const ItemVector& values);
Proposal MakeProposal(const ItemVector& claims);
Message MakeMessage(const std::array<int, kUtteranceLength>& symbols);

enum class Channel { kProposal, kLinguistic, kBoth, kNone };

bool ProposalChannelOpen(Channel channel);
bool LinguisticChannelOpen(Channel channel);
std::string_view ChannelName(Channel channel);
// Accepts "proposal", "linguistic", "both", "none".
Channel ParseChannel(std::string_view name);

enum class Role : int { kA = 0, kB = 1 };

inline int Index(Role role) { return static_cast<int>(role); }
inline Role Other(Role role) { return role == Role::kA ? Role::kB : Role::kA; }
// Agent A acts on odd turns, agent B on even turns.
inline Role ActingRole(int turn) { return turn % 2 == 1 ? Role::kA : Role::kB; }

// Reward R = alpha * R_self + beta * R_other.
struct RewardScheme {
  double alpha = 1.0;
  double beta = 0.0;

  static RewardScheme Selfish() { return {1.0, 0.0}; }
  static RewardScheme Prosocial() { return {1.0, 1.0}; }
  bool is_prosocial() const { return beta != 0.0; }
  friend bool operator==(const RewardScheme&, const RewardScheme&) = default;
};

std::string_view SocialityName(const RewardScheme& scheme);
// Accepts "selfish" and "prosocial".
RewardScheme ParseSociality(std::string_view name);

struct Action {
  bool terminate = false;
  Message message;
  Proposal proposal;
};

struct VisibleTurn {
  Message message;
  std::optional<Proposal> proposal;  // absent = the opponent sees a dummy
};

struct GameState {
  ItemPool pool;
  std::array<Utilities, 2> utilities;
  int turn_limit = kMaxTurns;
  int turn = 1;
  Channel channel = Channel::kBoth;

  // Raw proposal of the previous turn and who made it; the reward is always
  // computed from this one, even when the proposal channel is closed.
  std::optional<Proposal> last_proposal;
  std::optional<Role> last_proposer;
  // What the opponent is allowed to see of the previous turn.
  std::optional<Message> visible_message;
  std::optional<Proposal> visible_proposal;

  bool terminated = false;
  bool timed_out = false;
  std::optional<Role> terminator;

  bool over() const { return terminated || timed_out; }
  Role to_move() const { return ActingRole(turn); }
  const Utilities& utility(Role role) const { return utilities[Index(role)]; }
};

struct RawRewards {
  double a = 0.0;
  double b = 0.0;
  double of(Role role) const { return role == Role::kA ? a : b; }
};

int Dot(const ItemVector& x, const ItemVector& y);

bool IsValidFor(const Proposal& proposal, const ItemPool& pool);

// Poisson(7) conditioned on [4, 10], by rejection.
template <RandomSource R>
int SampleTurnLimit(R& rng) {
  for (;;) {
    const double u = rng.Uniform01();
    double pmf = std::exp(-kTurnLimitMean);
    double cdf = pmf;
    int k = 0;
    while (u >= cdf && k < 200) {
      ++k;
      pmf *= kTurnLimitMean / k;
      cdf += pmf;
    }
    if (k >= kMinTurns && k <= kMaxTurns) return k;
  }
}

// Samples pool and utilities uniformly. All-zero utility vectors and all-zero
// pools are redrawn. With fixed_horizon the turn limit is always 10.
template <RandomSource R>
GameState NewGame(R& rng, Channel channel, bool fixed_horizon = false) {
  GameState state;
  state.channel = channel;
  do {
    for (int& c : state.pool.counts) c = rng.UniformInt(0, kMaxItemCount);
  } while (state.pool.counts == ItemVector{0, 0, 0});
  for (Utilities& u : state.utilities) {
    do {
      for (int& v : u.values) v = rng.UniformInt(0, kMaxUtility);
    } while (u.values == ItemVector{0, 0, 0});
  }
  state.turn_limit = fixed_horizon ? kMaxTurns : SampleTurnLimit(rng);
  return state;
}

VisibleTurn ApplyChannelMask(Channel channel, const Message& message,
                             const Proposal& proposal);

// Advances the game by the acting agent's action. Termination on turn 1 is
// treated as a regular (non-terminating) action. Throws std::logic_error
// when the game is already over.
void Step(GameState& state, const Action& action);

// Throws std::logic_error if the game is not over.
RawRewards ComputeRewards(const GameState& state);

// Sum over items of pool * max(u_a, u_b): the best achievable R_A + R_B.
double JointOptimalReward(const ItemPool& pool, const Utilities& u_a,
                          const Utilities& u_b);

// Scaled reward of `role` under `scheme`, in [0, 1]. The scale is the best
// achievable value of alpha * R_self + beta * R_other, i.e. sum over items
// of pool * max(alpha * u_self, beta * u_other). A zero scale yields 0.
double ScaledReward(const RawRewards& raw, const GameState& state, Role role,
                    const RewardScheme& scheme);

// (R_A + R_B) / JointOptimalReward, or 0 when the optimum is 0.
double JointScore(const RawRewards& raw, const GameState& state);

// Joint value of `proposal` made by `proposer`, relative to the optimum.
// Invalid proposals score 0.
double ProposalOptimality(const GameState& state, const Proposal& proposal,
                          Role proposer);

}  // namespace negotiate

#endif  // NEGOTIATE_ENV_H_
