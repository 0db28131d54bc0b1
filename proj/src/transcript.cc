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

#include "negotiate/transcript.h"

#include <stdexcept>

#include "json.hpp"

namespace negotiate {
namespace {

using nlohmann::json;

template <std::size_t N>
std::array<int, N> IntArray(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != N) {
    throw std::invalid_argument(std::string("transcript: '") + key +
                                "' must be an array of " + std::to_string(N));
  }
  std::array<int, N> out{};
  for (std::size_t k = 0; k < N; ++k) {
    if (!v[k].is_number_integer()) {
      throw std::invalid_argument(std::string("transcript: '") + key +
                                  "' must hold integers");
    }
    out[k] = v[k].get<int>();
  }
  return out;
}

std::array<double, 2> RealPair(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw std::invalid_argument(std::string("transcript: '") + key +
                                "' must be an array of 2");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

GameState TranscriptRecord::Replay() const {
  GameState state;
  state.pool = pool;
  state.utilities = {util_a, util_b};
  state.turn_limit = n_limit;
  state.channel = channel;
  for (const TranscriptTurn& turn : turns) {
    Step(state, Action{turn.terminate, turn.message, turn.proposal});
  }
  return state;
}

std::optional<ItemVector> TranscriptRecord::AllocationToA() const {
  if (!agreed() || turns.size() < 2) return std::nullopt;
  const TranscriptTurn& accepted = turns[turns.size() - 2];
  if (!IsValidFor(accepted.proposal, pool)) return std::nullopt;
  if (accepted.agent == Role::kA) return accepted.proposal.claims;
  ItemVector rest{};
  for (int k = 0; k < kNumItems; ++k) {
    rest[k] = pool.counts[k] - accepted.proposal.claims[k];
  }
  return rest;
}

std::string ToJsonLine(const TranscriptRecord& record) {
  json turns = json::array();
  for (const TranscriptTurn& turn : record.turns) {
    turns.push_back({{"agent", Index(turn.agent)},
                     {"terminate", turn.terminate},
                     {"message", turn.message.symbols},
                     {"proposal", turn.proposal.claims}});
  }
  json j = {{"seed", record.seed},
            {"pool", record.pool.counts},
            {"util_a", record.util_a.values},
            {"util_b", record.util_b.values},
            {"n_limit", record.n_limit},
            {"channel", ChannelName(record.channel)},
            {"turns", std::move(turns)},
            {"raw_rewards", record.raw_rewards},
            {"scaled_scores", record.scaled_scores}};
  return j.dump();
}

TranscriptRecord ParseTranscriptLine(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("transcript: ") + e.what());
  }
  try {
    TranscriptRecord record;
    record.seed = j.at("seed").get<std::uint64_t>();
    record.pool = MakeItemPool(IntArray<kNumItems>(j, "pool"));
    record.util_a = MakeUtilities(IntArray<kNumItems>(j, "util_a"));
    record.util_b = MakeUtilities(IntArray<kNumItems>(j, "util_b"));
    record.n_limit = j.at("n_limit").get<int>();
    record.channel = ParseChannel(j.at("channel").get<std::string>());
    for (const json& t : j.at("turns")) {
      TranscriptTurn turn;
      const int agent = t.at("agent").get<int>();
      if (agent != 0 && agent != 1) {
        throw std::invalid_argument("transcript: agent must be 0 or 1");
      }
      turn.agent = static_cast<Role>(agent);
      turn.terminate = t.at("terminate").get<bool>();
      turn.message = MakeMessage(IntArray<kUtteranceLength>(t, "message"));
      turn.proposal = MakeProposal(IntArray<kNumItems>(t, "proposal"));
      record.turns.push_back(turn);
    }
    record.raw_rewards = RealPair(j, "raw_rewards");
    record.scaled_scores = RealPair(j, "scaled_scores");
    return record;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("transcript: ") + e.what());
  }
}

std::vector<TranscriptRecord> ReadTranscripts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TranscriptRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(ParseTranscriptLine(line));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path.string() + ":" +
                                  std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path)
    : out_(path) {
  if (!out_) throw std::runtime_error("cannot open " + path.string());
}

void TranscriptWriter::Write(const TranscriptRecord& record) {
  out_ << ToJsonLine(record) << '\n';
  if (!out_) throw std::runtime_error("transcript write failed");
}

}  // namespace negotiate
