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

#ifndef NEGOTIATE_TRANSCRIPT_H_
#define NEGOTIATE_TRANSCRIPT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "negotiate/env.h"

namespace negotiate {

struct TranscriptTurn {
  Role agent = Role::kA;
  bool terminate = false;
  Message message;
  Proposal proposal;
};

// One game, as written to transcripts.jsonl:
//   {"seed", "pool", "util_a", "util_b", "n_limit", "channel",
//    "turns": [{"agent", "terminate", "message", "proposal"}],
//    "raw_rewards", "scaled_scores"}
// Messages and proposals are the raw actions, before channel masking.
struct TranscriptRecord {
  std::uint64_t seed = 0;
  ItemPool pool;
  Utilities util_a;
  Utilities util_b;
  int n_limit = kMaxTurns;
  Channel channel = Channel::kBoth;
  std::vector<TranscriptTurn> turns;
  std::array<double, 2> raw_rewards{};
  std::array<double, 2> scaled_scores{};

  bool agreed() const { return !turns.empty() && turns.back().terminate; }
  // Rebuilds the terminal game state by replaying the turns.
  GameState Replay() const;
  // Items agent A ends up with, if the game ended in a valid agreement.
  std::optional<ItemVector> AllocationToA() const;
};

std::string ToJsonLine(const TranscriptRecord& record);
// Throws std::invalid_argument on malformed or schema-violating input.
TranscriptRecord ParseTranscriptLine(std::string_view line);

std::vector<TranscriptRecord> ReadTranscripts(const std::filesystem::path& path);

class TranscriptWriter {
 public:
  explicit TranscriptWriter(const std::filesystem::path& path);
  void Write(const TranscriptRecord& record);

 private:
  std::ofstream out_;
};

}  // namespace negotiate

#endif  // NEGOTIATE_TRANSCRIPT_H_
