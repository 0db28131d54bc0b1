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

// Run configuration: defaults, JSON round trip and command-line parsing.
// Precedence is flag > config file > default.

#ifndef NEGOTIATE_CONFIG_H_
#define NEGOTIATE_CONFIG_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "negotiate/env.h"
#include "negotiate/experiments.h"
#include "negotiate/trainer.h"

namespace negotiate {

enum class Experiment { kPaired, kPairedFixedHorizon, kCommunity, kAnalyze };

std::string_view ExperimentName(Experiment e);
Experiment ParseExperiment(std::string_view name);

// Invalid configuration; `key` names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Experiment experiment = Experiment::kPaired;
  Channel channel = Channel::kProposal;
  std::array<RewardScheme, 2> sociality{RewardScheme::Selfish(),
                                        RewardScheme::Selfish()};
  int episodes = 20000;
  int batch = 128;
  int eval_interval = 50;
  int test_batches = 5;
  int final_batches = 20;
  int train_log_interval = 10;
  int checkpoint_interval = 0;  // 0: final checkpoint only
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  // Community protocol.
  int community_size = kCommunitySize;
  int n_prosocial = 5;
  Role fixed_role = Role::kA;
  RewardScheme fixed_sociality = RewardScheme::Selfish();
  bool ids = false;
  int community_test_batches = 10;

  // Model and optimisation.
  int embed_dim = 100;
  int hidden_dim = 100;
  int id_embed_dim = 100;
  int vocab = kVocabSize;
  int utterance_length = kUtteranceLength;
  bool allow_dummy_symbol = true;
  bool variable_length_utterances = false;
  bool decode_closed_utterances = false;
  double lambda_term = 0.05;
  double lambda_prop = 0.05;
  double lambda_utt = 0.001;
  double baseline_smoothing = 0.7;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Analysis.
  std::vector<std::string> inputs;  // transcript files
  std::string checkpoint;           // for embedding geometry
  int probe_epochs = 200;
  int probe_folds = 10;

  std::string out = "runs";
  bool deterministic = false;
  int workers = 1;
};

// Throws ConfigError.
void Validate(const RunConfig& config);

std::string ToJson(const RunConfig& config);
// Applies the keys present in `json` on top of `base`. Unknown keys and
// ill-typed values throw ConfigError.
RunConfig ApplyJson(const RunConfig& base, std::string_view json);

// Default output root: $NEGOTIATE_OUT if set, else "runs".
std::string DefaultOutputRoot();

struct ParseResult {
  RunConfig config;
  bool exit = false;  // --help or similar was handled
  int exit_code = 0;
};

// Parses argv (flags plus an optional --config file). Overrides of file
// values by flags are reported on `log`. Throws ConfigError.
ParseResult ParseCommandLine(int argc, const char* const* argv,
                             std::ostream& out, std::ostream& log);

TrainConfig MakeTrainConfig(const RunConfig& config, std::uint64_t seed);
CommunityConfig MakeCommunityConfig(const RunConfig& config,
                                    std::uint64_t seed);

}  // namespace negotiate

#endif  // NEGOTIATE_CONFIG_H_
