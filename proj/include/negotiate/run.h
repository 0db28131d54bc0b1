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

// Runs a configured experiment and writes its artifacts:
//
//   <out>/config.json          the full configuration
//   <out>/summary.json         per-seed results and table statistics
//   <out>/table.csv            one table row over all seeds
//   <out>/seed_<s>/metrics.csv
//   <out>/seed_<s>/transcripts.jsonl
//   <out>/seed_<s>/proposal_optimality.csv   (paired experiments)
//   <out>/seed_<s>/pca.csv                   (community runs with IDs)
//   <out>/seed_<s>/checkpoints/final.ckpt
//
// Analysis runs write unigram.csv, bigram.csv, probe.csv, spearman.csv and
// pca.csv as far as the inputs allow.

#ifndef NEGOTIATE_RUN_H_
#define NEGOTIATE_RUN_H_

#include <filesystem>
#include <ostream>
#include <string>

#include "negotiate/config.h"

namespace negotiate {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Returns an exit status; diagnostics go to `log`.
int Run(const RunConfig& config, std::ostream& log);

// Short label of a paired configuration, e.g. "prosocial-prosocial/linguistic".
std::string PairedLabel(const RunConfig& config);

// Entry point shared by the command-line tool and tests.
int Main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& log);

}  // namespace negotiate

#endif  // NEGOTIATE_RUN_H_
