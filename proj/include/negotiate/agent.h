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

// The negotiating agent.
//
// Each turn the agent re-encodes its observation: the item context
// [pool; own utilities] (6 tokens), the opponent's last utterance (6 tokens)
// and the opponent's last proposal (3 tokens) each go through their own
// LSTM. Numeric tokens (context and proposal) share one embedding table;
// utterance symbols use a second one. The three final hidden states, plus an
// optional opponent-ID embedding, are concatenated and passed through a
// linear layer and a ReLU to give the hidden state h. From h:
//   - termination: linear -> sigmoid,
//   - proposal: three independent linear heads over {0..5},
//   - utterance: an LSTM decoder started from (h, 0), fed the dummy symbol
//     first and then its own previous output, for 6 symbols.

#ifndef NEGOTIATE_AGENT_H_
#define NEGOTIATE_AGENT_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "negotiate/diff/parameter.h"
#include "negotiate/diff/tape.h"
#include "negotiate/env.h"
#include "negotiate/rng.h"

namespace negotiate {

struct AgentConfig {
  int embed_dim = 100;
  int hidden_dim = 100;
  int id_embed_dim = 100;
  // Size of the opponent-ID table; 0 removes the ID pathway entirely.
  int num_opponent_ids = 0;
  // Whether symbol 0 may be produced on an open linguistic channel.
  bool allow_dummy_symbol = true;
  // Treat a generated symbol 0 as end of utterance (rest padded with 0).
  bool variable_length_utterances = false;
};

struct Observation {
  std::array<int, 2 * kNumItems> item_context{};  // pool, then own utilities
  Message prev_message;
  Proposal prev_proposal;
  // Bookkeeping only; the network sees the dummy values [0, 0, 0].
  bool proposal_is_dummy = true;
  std::optional<int> opponent_id;
};

// What `role` is allowed to see at the current turn: never the opponent's
// utilities nor its unmasked proposal.
Observation Observe(const GameState& state, Role role,
                    std::optional<int> opponent_id = std::nullopt);

enum class ActMode { kSample, kGreedy, kReplay };

struct PolicyValues {
  double term = 0.0;
  double utt = 0.0;
  double prop = 0.0;
  double total() const { return term + utt + prop; }
};

// Tape handles of one batched turn, for attaching the training signal.
struct TurnHeads {
  diff::HeadId term;
  std::array<diff::HeadId, kNumItems> prop;
  std::vector<diff::HeadId> utt;  // one per decoded position; may be empty
  // utt_active[k][b]: column b was still producing symbols at position k.
  std::vector<std::vector<char>> utt_active;
};

struct ActOptions {
  ActMode mode = ActMode::kSample;
  // When false the utterance policy is not run and the message is all dummy.
  bool decode_utterance = true;
  std::span<Rng* const> rngs;       // one per column, kSample only
  std::span<const Action> replay;   // one per column, kReplay only
};

template <typename S>
struct BatchAct {
  std::vector<Action> actions;
  std::vector<PolicyValues> log_prob;
  std::vector<PolicyValues> entropy;
  TurnHeads heads;
  diff::Var hidden;
};

template <typename S>
class Agent {
 public:
  Agent(const AgentConfig& config, std::uint64_t init_seed);
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  const AgentConfig& config() const { return config_; }
  diff::ParameterSet<S>& params() { return params_; }
  const diff::ParameterSet<S>& params() const { return params_; }

  // Final context-LSTM state for each observation; H x B.
  diff::Var EncodeContexts(diff::Tape<S>& tape,
                           std::span<const Observation> obs);

  // Hidden state h for each observation; H x B. `context`, if given, must be
  // EncodeContexts() of the same observations (lets callers reuse the
  // per-game context encoding across turns).
  diff::Var Encode(diff::Tape<S>& tape, std::span<const Observation> obs,
                   std::optional<diff::Var> context = std::nullopt);

  BatchAct<S> Act(diff::Tape<S>& tape, std::span<const Observation> obs,
                  const ActOptions& options,
                  std::optional<diff::Var> context = std::nullopt);

  // Trainable ID rows, E_id x B. Throws std::out_of_range for unknown ids
  // and std::logic_error when the ID pathway is disabled.
  diff::Var OpponentEmbedding(diff::Tape<S>& tape, std::span<const int> ids);

  // Width of the combiner input: 3H, plus E_id with IDs enabled.
  int combiner_input_dim() const { return combiner_.in; }

 private:
  // Runs `lstm` over token columns, deduplicating identical sequences.
  template <std::size_t N>
  diff::Var EncodeSequences(diff::Tape<S>& tape, diff::Parameter<S>& table,
                            const diff::LstmParams<S>& lstm,
                            const std::vector<std::array<int, N>>& seqs);
  std::vector<Message> DecodeUtterances(diff::Tape<S>& tape, diff::Var hidden,
                                        const ActOptions& options,
                                        BatchAct<S>& out);

  AgentConfig config_;
  diff::ParameterSet<S> params_;
  diff::Parameter<S>* numeric_embedding_ = nullptr;
  diff::Parameter<S>* symbol_embedding_ = nullptr;
  diff::Parameter<S>* opponent_ids_ = nullptr;
  diff::LstmParams<S> context_encoder_;
  diff::LstmParams<S> message_encoder_;
  diff::LstmParams<S> proposal_encoder_;
  diff::LinearParams<S> combiner_;
  diff::LinearParams<S> term_head_;
  std::array<diff::LinearParams<S>, kNumItems> prop_heads_;
  diff::LstmParams<S> decoder_;
  diff::LinearParams<S> decoder_out_;
};

extern template class Agent<float>;
extern template class Agent<double>;

}  // namespace negotiate

#endif  // NEGOTIATE_AGENT_H_
