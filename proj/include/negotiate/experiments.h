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

// Experiment protocols: paired self-play (random or fixed horizon) and a
// fixed agent trained against a community of opponents.

#ifndef NEGOTIATE_EXPERIMENTS_H_
#define NEGOTIATE_EXPERIMENTS_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "negotiate/agent.h"
#include "negotiate/diff/adam.h"
#include "negotiate/rng.h"
#include "negotiate/trainer.h"

namespace negotiate {

// Mean, sample standard deviation and quartiles (linear interpolation).
struct Spread {
  int count = 0;
  double mean = 0.0;
  double std = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

Spread Describe(std::span<const double> values);

// Mean proposal optimality of the offers made at one turn.
struct TurnOptimality {
  int turn = 0;
  Spread optimality;
};

// Per turn over all non-terminating actions of `games`.
std::vector<TurnOptimality> ProposalOptimalityByTurn(
    std::span<const Trajectory> games);

// Most frequent game length; ties go to the shorter length.
int ModalFinalTurn(std::span<const Trajectory> games);

struct PairedResult {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  BatchMetrics final_metrics;      // greedy, on the final games
  std::vector<Trajectory> final_games;
  std::vector<TurnOptimality> per_turn;
};

struct PairedOptions {
  // Greedy games played after training to produce transcripts and the
  // final metrics, in batches of the training batch size.
  int final_batches = 20;
  // Called after every emitted metrics row; the trainer is mid-run.
  std::function<void(PairedTrainer&, const MetricsRow&)> on_row;
  // Called once after training, before the final games.
  std::function<void(PairedTrainer&)> on_done;
};

// Trains one seed. `config.seed` selects the run.
PairedResult RunPairedSeed(const TrainConfig& config,
                           const PairedOptions& options = {});

// Same with the turn limit pinned to the maximum.
PairedResult RunPairedFixedHorizonSeed(TrainConfig config,
                                       const PairedOptions& options = {});

// One table row over seeds.
struct TableRow {
  std::string label;
  Spread joint_optimality;
  Spread turns;
  Spread agreement;
  Spread score_a;
  Spread score_b;
};

TableRow SummarizeSeeds(std::string label,
                        std::span<const PairedResult> results);

std::string TableCsvHeader();
std::string FormatTableRow(const TableRow& row);

inline constexpr int kCommunitySize = 10;

struct CommunityConfig {
  int community_size = kCommunitySize;
  int n_prosocial = 5;
  Role fixed_role = Role::kA;
  RewardScheme fixed_scheme = RewardScheme::Selfish();
  bool ids_given = false;
  Channel channel = Channel::kProposal;
  AgentConfig agent;  // shared by all agents; the ID table is set internally
  int episodes = 20000;
  int batch_size = 128;
  int eval_interval = 50;
  int test_batches = 10;
  int train_log_interval = 10;
  std::uint64_t seed = 0;
  EntropyWeights entropy;
  diff::AdamOptions adam;
  double baseline_smoothing = 0.7;
};

void ValidateCommunityConfig(const CommunityConfig& config);

// Uniform choice of the community member for each training episode.
class CommunitySampler {
 public:
  CommunitySampler(int community_size, std::uint64_t seed)
      : size_(community_size), rng_(seed) {}
  int Next() { return rng_.UniformInt(0, size_ - 1); }

 private:
  int size_;
  Rng rng_;
};

struct CommunityEval {
  // Fixed agent's objective per test game: its own scaled reward if selfish,
  // joint optimality if prosocial.
  std::vector<double> objective;
  std::vector<Trajectory> games;
  BatchMetrics metrics;
};

// A fixed agent against community members 0..n_prosocial-1 (prosocial) and
// n_prosocial..size-1 (selfish). Each episode one member is sampled; only
// that member and the fixed agent are updated.
class CommunityTrainer {
 public:
  explicit CommunityTrainer(const CommunityConfig& config);

  using Sink = std::function<void(const MetricsRow&)>;

  void Run(const Sink& sink);
  // Returns the sampled member.
  int TrainEpisode(int episode, BatchMetrics* metrics = nullptr);
  // Test protocol: batch i is played against prosocial member
  // i mod n_prosocial; no parameters change.
  CommunityEval Evaluate();

  Agent<float>& fixed_agent() { return *fixed_; }
  Agent<float>& member(int m) { return *members_.at(m); }
  bool member_is_prosocial(int m) const { return m < config_.n_prosocial; }
  RewardScheme member_scheme(int m) const {
    return member_is_prosocial(m) ? RewardScheme::Prosocial()
                                  : RewardScheme::Selfish();
  }
  const CommunityConfig& config() const { return config_; }

 private:
  EnvConfig MatchEnv(int member) const;
  Rollout<float> Play(int member, std::span<const std::uint64_t> seeds,
                      ActMode mode);

  CommunityConfig config_;
  std::unique_ptr<Agent<float>> fixed_;
  diff::AdamState<float> fixed_optimizer_;
  BaselineState fixed_baseline_;
  std::vector<std::unique_ptr<Agent<float>>> members_;
  std::vector<diff::AdamState<float>> member_optimizers_;
  std::vector<BaselineState> member_baselines_;
  CommunitySampler sampler_;
  std::vector<std::uint64_t> test_seeds_;
};

struct CommunityResult {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  CommunityEval final_eval;
  Spread objective;
};

struct CommunityOptions {
  std::function<void(CommunityTrainer&, const MetricsRow&)> on_row;
  std::function<void(CommunityTrainer&)> on_done;
};

CommunityResult RunCommunitySeed(const CommunityConfig& config,
                                 const CommunityOptions& options = {});

}  // namespace negotiate

#endif  // NEGOTIATE_EXPERIMENTS_H_
