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

#include "negotiate/agent.h"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

namespace negotiate {
namespace {

using diff::HeadResult;
using diff::Var;

constexpr int kNumericTokens = kMaxUtility + 1;  // values 0..10
constexpr int kProposalClasses = kMaxItemCount + 1;

int Argmax(const auto* probs, int k) {
  int best = 0;
  for (int i = 1; i < k; ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

template <typename S>
int SampleIndex(Rng& rng, const S* probs, int k) {
  const double u = rng.Uniform01();
  double cdf = 0.0;
  int last = 0;
  for (int i = 0; i < k; ++i) {
    if (probs[i] <= S(0)) continue;
    last = i;
    cdf += static_cast<double>(probs[i]);
    if (u < cdf) return i;
  }
  return last;
}

void CheckOptions(const ActOptions& options, std::size_t batch) {
  if (options.mode == ActMode::kSample && options.rngs.size() != batch) {
    throw std::invalid_argument("Agent::Act: need one Rng per column");
  }
  if (options.mode == ActMode::kReplay && options.replay.size() != batch) {
    throw std::invalid_argument("Agent::Act: need one replay action per column");
  }
}

}  // namespace

Observation Observe(const GameState& state, Role role,
                    std::optional<int> opponent_id) {
  Observation obs;
  const Utilities& own = state.utility(role);
  for (int k = 0; k < kNumItems; ++k) {
    obs.item_context[k] = state.pool.counts[k];
    obs.item_context[kNumItems + k] = own.values[k];
  }
  if (state.visible_message) obs.prev_message = *state.visible_message;
  if (state.visible_proposal) {
    obs.prev_proposal = *state.visible_proposal;
    obs.proposal_is_dummy = false;
  }
  obs.opponent_id = opponent_id;
  return obs;
}

template <typename S>
Agent<S>::Agent(const AgentConfig& config, std::uint64_t init_seed)
    : config_(config) {
  if (config.embed_dim <= 0 || config.hidden_dim <= 0 ||
      config.num_opponent_ids < 0 ||
      (config.num_opponent_ids > 0 && config.id_embed_dim <= 0)) {
    throw std::invalid_argument("AgentConfig: non-positive dimension");
  }
  Rng rng(init_seed);
  const int E = config.embed_dim;
  const int H = config.hidden_dim;
  numeric_embedding_ =
      &diff::AddEmbedding(params_, "embed_numeric", kNumericTokens, E, rng);
  symbol_embedding_ =
      &diff::AddEmbedding(params_, "embed_symbol", kVocabSize, E, rng);
  context_encoder_ = diff::AddLstm(params_, "encoder_context", E, H, rng);
  message_encoder_ = diff::AddLstm(params_, "encoder_msg", E, H, rng);
  proposal_encoder_ = diff::AddLstm(params_, "encoder_prop", E, H, rng);
  int combiner_in = 3 * H;
  if (config.num_opponent_ids > 0) {
    opponent_ids_ = &diff::AddEmbedding(params_, "opponent_ids",
                                        config.num_opponent_ids,
                                        config.id_embed_dim, rng);
    combiner_in += config.id_embed_dim;
  }
  combiner_ = diff::AddLinear(params_, "combiner", combiner_in, H, rng);
  term_head_ = diff::AddLinear(params_, "term", H, 1, rng);
  for (int k = 0; k < kNumItems; ++k) {
    prop_heads_[k] = diff::AddLinear(params_, "prop_" + std::to_string(k), H,
                                     kProposalClasses, rng);
  }
  decoder_ = diff::AddLstm(params_, "decoder", E, H, rng);
  decoder_out_ = diff::AddLinear(params_, "decoder_out", H, kVocabSize, rng);
}

template <typename S>
template <std::size_t N>
Var Agent<S>::EncodeSequences(diff::Tape<S>& tape, diff::Parameter<S>& table,
                              const diff::LstmParams<S>& lstm,
                              const std::vector<std::array<int, N>>& seqs) {
  std::map<std::array<int, N>, int> unique_index;
  std::vector<int> column_of(seqs.size());
  std::vector<const std::array<int, N>*> uniques;
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    auto [it, inserted] =
        unique_index.emplace(seqs[b], static_cast<int>(uniques.size()));
    if (inserted) uniques.push_back(&seqs[b]);
    column_of[b] = it->second;
  }
  diff::LstmState state;
  std::vector<int> tokens(uniques.size());
  for (std::size_t pos = 0; pos < N; ++pos) {
    for (std::size_t u = 0; u < uniques.size(); ++u) tokens[u] = (*uniques[u])[pos];
    const Var x = tape.Embedding(table, tokens);
    state = tape.Lstm(lstm, x, state);
  }
  if (uniques.size() == seqs.size()) {
    bool identity = true;
    for (std::size_t b = 0; b < seqs.size(); ++b) {
      identity = identity && column_of[b] == static_cast<int>(b);
    }
    if (identity) return state.h;
  }
  return tape.Gather(state.h, column_of);
}

template <typename S>
Var Agent<S>::EncodeContexts(diff::Tape<S>& tape,
                             std::span<const Observation> obs) {
  std::vector<std::array<int, 2 * kNumItems>> seqs;
  seqs.reserve(obs.size());
  for (const Observation& o : obs) seqs.push_back(o.item_context);
  return EncodeSequences(tape, *numeric_embedding_, context_encoder_, seqs);
}

template <typename S>
Var Agent<S>::OpponentEmbedding(diff::Tape<S>& tape, std::span<const int> ids) {
  if (opponent_ids_ == nullptr) {
    throw std::logic_error("Agent::OpponentEmbedding: IDs are disabled");
  }
  return tape.Embedding(*opponent_ids_, ids);
}

template <typename S>
Var Agent<S>::Encode(diff::Tape<S>& tape, std::span<const Observation> obs,
                     std::optional<Var> context) {
  if (obs.empty()) throw std::invalid_argument("Agent::Encode: empty batch");
  const Var h_context = context ? *context : EncodeContexts(tape, obs);

  std::vector<std::array<int, kUtteranceLength>> messages;
  std::vector<std::array<int, kNumItems>> proposals;
  for (const Observation& o : obs) {
    messages.push_back(o.prev_message.symbols);
    proposals.push_back(o.proposal_is_dummy ? ItemVector{0, 0, 0}
                                            : o.prev_proposal.claims);
  }
  const Var h_message =
      EncodeSequences(tape, *symbol_embedding_, message_encoder_, messages);
  const Var h_proposal =
      EncodeSequences(tape, *numeric_embedding_, proposal_encoder_, proposals);

  Var combined;
  if (opponent_ids_ != nullptr) {
    std::vector<int> ids;
    for (const Observation& o : obs) {
      if (!o.opponent_id) {
        throw std::invalid_argument("Agent::Encode: opponent id required");
      }
      ids.push_back(*o.opponent_id);
    }
    const Var id_embedding = OpponentEmbedding(tape, ids);
    combined = tape.Concat({h_context, h_message, h_proposal, id_embedding});
  } else {
    combined = tape.Concat({h_context, h_message, h_proposal});
  }
  return tape.Relu(tape.Linear(combiner_, combined));
}

template <typename S>
std::vector<Message> Agent<S>::DecodeUtterances(diff::Tape<S>& tape,
                                                Var hidden,
                                                const ActOptions& options,
                                                BatchAct<S>& out) {
  const int B = tape.cols(hidden);
  std::vector<Message> messages(B);
  std::vector<char> active(B, 1);
  std::vector<bool> allowed;
  if (!config_.allow_dummy_symbol && !config_.variable_length_utterances) {
    allowed.assign(kVocabSize, true);
    allowed[kDummySymbol] = false;
  }
  // std::vector<bool> has no contiguous storage; copy into a plain array.
  std::unique_ptr<bool[]> allowed_buf;
  std::span<const bool> allowed_span;
  if (!allowed.empty()) {
    allowed_buf = std::make_unique<bool[]>(allowed.size());
    std::copy(allowed.begin(), allowed.end(), allowed_buf.get());
    allowed_span = std::span<const bool>(allowed_buf.get(), allowed.size());
  }

  diff::LstmState state{hidden, Var{}};
  std::vector<int> inputs(B, kDummySymbol);
  for (int pos = 0; pos < kUtteranceLength; ++pos) {
    if (std::none_of(active.begin(), active.end(), [](char a) { return a; })) {
      break;
    }
    const Var x = tape.Embedding(*symbol_embedding_, inputs);
    state = tape.Lstm(decoder_, x, state);
    const Var logits = tape.Linear(decoder_out_, state.h);
    auto choose = [&](int b, const S* probs, int k) -> int {
      if (!active[b]) return kDummySymbol;
      switch (options.mode) {
        case ActMode::kSample:
          return SampleIndex(*options.rngs[b], probs, k);
        case ActMode::kGreedy:
          return Argmax(probs, k);
        case ActMode::kReplay:
          return options.replay[b].message.symbols[pos];
      }
      return 0;
    };
    HeadResult<S> head = tape.Categorical(logits, choose, allowed_span);
    out.heads.utt.push_back(head.id);
    out.heads.utt_active.push_back(active);
    for (int b = 0; b < B; ++b) {
      if (!active[b]) continue;
      messages[b].symbols[pos] = head.choices[b];
      out.log_prob[b].utt += head.log_prob[b];
      out.entropy[b].utt += head.entropy[b];
      if (config_.variable_length_utterances &&
          head.choices[b] == kDummySymbol) {
        active[b] = 0;
      }
    }
    inputs = head.choices;
  }
  return messages;
}

template <typename S>
BatchAct<S> Agent<S>::Act(diff::Tape<S>& tape, std::span<const Observation> obs,
                          const ActOptions& options, std::optional<Var> context) {
  const std::size_t B = obs.size();
  CheckOptions(options, B);
  BatchAct<S> out;
  out.actions.resize(B);
  out.log_prob.resize(B);
  out.entropy.resize(B);
  out.hidden = Encode(tape, obs, context);

  const Var term_logit = tape.Linear(term_head_, out.hidden);
  HeadResult<S> term = tape.Bernoulli(term_logit, [&](int b, S p) -> bool {
    switch (options.mode) {
      case ActMode::kSample:
        return options.rngs[b]->Uniform01() < static_cast<double>(p);
      case ActMode::kGreedy:
        return p > S(0.5);
      case ActMode::kReplay:
        return options.replay[b].terminate;
    }
    return false;
  });
  out.heads.term = term.id;
  for (std::size_t b = 0; b < B; ++b) {
    out.actions[b].terminate = term.choices[b] == 1;
    out.log_prob[b].term = term.log_prob[b];
    out.entropy[b].term = term.entropy[b];
  }

  for (int item = 0; item < kNumItems; ++item) {
    const Var logits = tape.Linear(prop_heads_[item], out.hidden);
    HeadResult<S> head =
        tape.Categorical(logits, [&](int b, const S* probs, int k) -> int {
          switch (options.mode) {
            case ActMode::kSample:
              return SampleIndex(*options.rngs[b], probs, k);
            case ActMode::kGreedy:
              return Argmax(probs, k);
            case ActMode::kReplay:
              return options.replay[b].proposal.claims[item];
          }
          return 0;
        });
    out.heads.prop[item] = head.id;
    for (std::size_t b = 0; b < B; ++b) {
      out.actions[b].proposal.claims[item] = head.choices[b];
      out.log_prob[b].prop += head.log_prob[b];
      out.entropy[b].prop += head.entropy[b];
    }
  }

  if (options.decode_utterance) {
    std::vector<Message> messages =
        DecodeUtterances(tape, out.hidden, options, out);
    for (std::size_t b = 0; b < B; ++b) out.actions[b].message = messages[b];
  }
  return out;
}

template class Agent<float>;
template class Agent<double>;

}  // namespace negotiate
