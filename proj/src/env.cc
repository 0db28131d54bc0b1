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

#include "negotiate/env.h"

#include <algorithm>
#include <stdexcept>

namespace negotiate {
namespace {

void CheckRange(const ItemVector& v, int hi, const char* what) {
  for (int x : v) {
    if (x < 0 || x > hi) {
      throw std::invalid_argument(std::string(what) + ": element " +
                                  std::to_string(x) + " outside [0, " +
                                  std::to_string(hi) + "]");
    }
  }
}

}  // namespace

ItemPool MakeItemPool(const ItemVector& counts) {
  CheckRange(counts, kMaxItemCount, "ItemPool");
  return ItemPool{counts};
}

Utilities MakeUtilities(const ItemVector& values) {
  CheckRange(values, kMaxUtility, "Utilities");
  if (values == ItemVector{0, 0, 0}) {
    throw std::invalid_argument("Utilities: at least one value must be > 0");
  }
  return Utilities{values};
}

Proposal MakeProposal(const ItemVector& claims) {
  CheckRange(claims, kMaxItemCount, "Proposal");
  return Proposal{claims};
}

Message MakeMessage(const std::array<int, kUtteranceLength>& symbols) {
  for (int s : symbols) {
    if (s < 0 || s >= kVocabSize) {
      throw std::invalid_argument("Message: symbol " + std::to_string(s) +
                                  " outside vocabulary");
    }
  }
  return Message{symbols};
}

bool ProposalChannelOpen(Channel channel) {
  return channel == Channel::kProposal || channel == Channel::kBoth;
}

bool LinguisticChannelOpen(Channel channel) {
  return channel == Channel::kLinguistic || channel == Channel::kBoth;
}

std::string_view ChannelName(Channel channel) {
  switch (channel) {
    case Channel::kProposal:
      return "proposal";
    case Channel::kLinguistic:
      return "linguistic";
    case Channel::kBoth:
      return "both";
    case Channel::kNone:
      return "none";
  }
  return "unknown";
}

Channel ParseChannel(std::string_view name) {
  if (name == "proposal") return Channel::kProposal;
  if (name == "linguistic") return Channel::kLinguistic;
  if (name == "both") return Channel::kBoth;
  if (name == "none") return Channel::kNone;
  throw std::invalid_argument("unknown channel '" + std::string(name) + "'");
}

std::string_view SocialityName(const RewardScheme& scheme) {
  if (scheme == RewardScheme::Selfish()) return "selfish";
  if (scheme == RewardScheme::Prosocial()) return "prosocial";
  return "custom";
}

RewardScheme ParseSociality(std::string_view name) {
  if (name == "selfish") return RewardScheme::Selfish();
  if (name == "prosocial") return RewardScheme::Prosocial();
  throw std::invalid_argument("unknown sociality '" + std::string(name) + "'");
}

int Dot(const ItemVector& x, const ItemVector& y) {
  int total = 0;
  for (int k = 0; k < kNumItems; ++k) total += x[k] * y[k];
  return total;
}

bool IsValidFor(const Proposal& proposal, const ItemPool& pool) {
  for (int k = 0; k < kNumItems; ++k) {
    if (proposal.claims[k] < 0 || proposal.claims[k] > pool.counts[k]) {
      return false;
    }
  }
  return true;
}

VisibleTurn ApplyChannelMask(Channel channel, const Message& message,
                             const Proposal& proposal) {
  VisibleTurn visible;
  if (LinguisticChannelOpen(channel)) visible.message = message;
  if (ProposalChannelOpen(channel)) visible.proposal = proposal;
  return visible;
}

void Step(GameState& state, const Action& action) {
  if (state.over()) throw std::logic_error("Step: game is already over");
  if (state.turn < 1 || state.turn > state.turn_limit) {
    throw std::logic_error("Step: turn counter outside [1, N]");
  }
  const Role actor = state.to_move();
  if (action.terminate && state.turn >= 2) {
    state.terminated = true;
    state.terminator = actor;
    return;
  }
  state.last_proposal = action.proposal;
  state.last_proposer = actor;
  VisibleTurn visible =
      ApplyChannelMask(state.channel, action.message, action.proposal);
  state.visible_message = visible.message;
  state.visible_proposal = visible.proposal;
  if (state.turn == state.turn_limit) {
    state.timed_out = true;
    return;
  }
  ++state.turn;
}

RawRewards ComputeRewards(const GameState& state) {
  if (!state.over()) {
    throw std::logic_error("ComputeRewards: game is not over");
  }
  if (!state.terminated) return {};
  // A terminating agent always has a preceding proposal from the other one.
  const Role proposer = *state.last_proposer;
  const Proposal& p = *state.last_proposal;
  if (!IsValidFor(p, state.pool)) return {};
  ItemVector rest{};
  for (int k = 0; k < kNumItems; ++k) rest[k] = state.pool.counts[k] - p.claims[k];
  const double proposer_reward = Dot(state.utility(proposer).values, p.claims);
  const double acceptor_reward = Dot(state.utility(Other(proposer)).values, rest);
  RawRewards raw;
  if (proposer == Role::kA) {
    raw.a = proposer_reward;
    raw.b = acceptor_reward;
  } else {
    raw.b = proposer_reward;
    raw.a = acceptor_reward;
  }
  return raw;
}

double JointOptimalReward(const ItemPool& pool, const Utilities& u_a,
                          const Utilities& u_b) {
  double total = 0.0;
  for (int k = 0; k < kNumItems; ++k) {
    total += pool.counts[k] * std::max(u_a.values[k], u_b.values[k]);
  }
  return total;
}

double ScaledReward(const RawRewards& raw, const GameState& state, Role role,
                    const RewardScheme& scheme) {
  const Utilities& mine = state.utility(role);
  const Utilities& theirs = state.utility(Other(role));
  double scale = 0.0;
  for (int k = 0; k < kNumItems; ++k) {
    scale += state.pool.counts[k] * std::max(scheme.alpha * mine.values[k],
                                             scheme.beta * theirs.values[k]);
  }
  if (scale <= 0.0) return 0.0;
  return (scheme.alpha * raw.of(role) + scheme.beta * raw.of(Other(role))) /
         scale;
}

double JointScore(const RawRewards& raw, const GameState& state) {
  const double best =
      JointOptimalReward(state.pool, state.utilities[0], state.utilities[1]);
  if (best <= 0.0) return 0.0;
  return (raw.a + raw.b) / best;
}

double ProposalOptimality(const GameState& state, const Proposal& proposal,
                          Role proposer) {
  if (!IsValidFor(proposal, state.pool)) return 0.0;
  const double best =
      JointOptimalReward(state.pool, state.utilities[0], state.utilities[1]);
  if (best <= 0.0) return 0.0;
  ItemVector rest{};
  for (int k = 0; k < kNumItems; ++k) {
    rest[k] = state.pool.counts[k] - proposal.claims[k];
  }
  return (Dot(state.utility(proposer).values, proposal.claims) +
          Dot(state.utility(Other(proposer)).values, rest)) /
         best;
}

}  // namespace negotiate
