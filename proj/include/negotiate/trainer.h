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

// Batched self-play rollouts and REINFORCE updates.
//
// Per game and per learning agent the ascent direction is
//   sum over the agent's turns of grad log pi(a_t) * (R - b)
//   + sum over policies of lambda_policy * grad H(pi_policy),
// averaged over the games of the batch. R is the agent's own scaled reward
// and b an exponentially smoothed mean of past batch rewards.

#ifndef NEGOTIATE_TRAINER_H_
#define NEGOTIATE_TRAINER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negotiate/agent.h"
#include "negotiate/diff/adam.h"
#include "negotiate/diff/tape.h"
#include "negotiate/env.h"
#include "negotiate/transcript.h"

namespace negotiate {

struct EnvConfig {
  Channel channel = Channel::kProposal;
  bool fixed_horizon = false;
  std::array<RewardScheme, 2> schemes{RewardScheme::Selfish(),
                                      RewardScheme::Selfish()};
  // Opponent ID shown to the agent playing each role, if any.
  std::array<std::optional<int>, 2> opponent_ids;
  // Run the utterance policy even when the linguistic channel is closed.
  bool decode_closed_utterances = false;
};

struct TurnLog {
  Role agent = Role::kA;
  Action action;  // as applied; a turn-1 termination is recorded as false
  PolicyValues log_prob;
  PolicyValues entropy;
};

struct Trajectory {
  std::uint64_t seed = 0;
  GameState initial;
  GameState final_state;
  std::vector<TurnLog> turns;
  RawRewards raw;
  std::array<double, 2> scores{};  // each role under its own scheme
  double joint_optimality = 0.0;

  int turns_taken() const { return static_cast<int>(turns.size()); }
  bool agreed() const { return final_state.terminated; }
  TranscriptRecord ToTranscript() const;
};

template <typename S>
struct Rollout {
  struct TurnBatch {
    Role role = Role::kA;
    int turn = 1;
    std::vector<int> games;  // column -> game index
    TurnHeads heads;
  };

  std::unique_ptr<diff::Tape<S>> tape;
  std::vector<Trajectory> games;
  std::vector<TurnBatch> turn_batches;
};

// Plays one game per seed to completion. kSample records a tape for
// training; kGreedy runs without recording.
template <typename S>
Rollout<S> RolloutBatch(Agent<S>& agent_a, Agent<S>& agent_b,
                        const EnvConfig& env,
                        std::span<const std::uint64_t> game_seeds,
                        ActMode mode);

struct EntropyWeights {
  double term = 0.05;
  double prop = 0.05;
  double utt = 0.001;
};

// b <- smoothing * b + (1 - smoothing) * mean batch reward.
struct BaselineState {
  double value = 0.0;
  double smoothing = 0.7;

  void Update(double batch_mean_reward) {
    value = smoothing * value + (1.0 - smoothing) * batch_mean_reward;
  }
};

// Attaches the REINFORCE-with-entropy objective of the agent playing `role`
// to the rollout's heads, as a loss to be minimised. `rewards` holds one
// reward per game. The termination log-prob of turn 1 is excluded since
// that action is always coerced to "continue".
template <typename S>
void AttachReinforceObjective(Rollout<S>& rollout, Role role,
                              std::span<const double> rewards, double baseline,
                              const EntropyWeights& weights);

template <typename S>
struct Learner {
  Agent<S>* agent = nullptr;
  diff::AdamState<S>* optimizer = nullptr;
  BaselineState* baseline = nullptr;
  Role role = Role::kA;
};

// One update for every learner from a sampled rollout: objectives are
// attached with the current baselines, a single backward pass fills the
// gradients, each agent takes an Adam step, then baselines move towards the
// batch mean reward.
template <typename S>
void ReinforceUpdate(Rollout<S>& rollout, std::span<const Learner<S>> learners,
                     const EntropyWeights& weights);

struct BatchMetrics {
  double mean_score_a = 0.0;
  double mean_score_b = 0.0;
  double joint_optimality = 0.0;
  double mean_turns = 0.0;
  double agreement_rate = 0.0;
  // Mean per-turn entropy of each policy.
  double entropy_term = 0.0;
  double entropy_utt = 0.0;
  double entropy_prop = 0.0;
};

BatchMetrics Summarize(std::span<const Trajectory> games);

struct MetricsRow {
  int episode = 0;
  bool eval = false;
  BatchMetrics metrics;
};

std::string MetricsCsvHeader();
std::string FormatMetricsRow(const MetricsRow& row);

struct TrainConfig {
  EnvConfig env;
  AgentConfig agent_a;
  AgentConfig agent_b;
  int episodes = 20000;
  int batch_size = 128;
  int eval_interval = 50;
  int test_batches = 5;
  // Every n-th training episode is also reported; 0 disables.
  int train_log_interval = 10;
  std::uint64_t seed = 0;
  EntropyWeights entropy;
  diff::AdamOptions adam;
  double baseline_smoothing = 0.7;
};

// Named sub-streams of a run seed.
enum class SeedStream : std::uint64_t {
  kInitA = 1,
  kInitB = 2,
  kTest = 3,
  kTrain = 4,
  kFinal = 5,
  kCommunity = 6,
  kMember = 100,
};

std::uint64_t StreamSeed(std::uint64_t run_seed, SeedStream stream,
                         std::uint64_t index = 0);

// Seeds of `count` games drawn from one stream, starting at `first`.
std::vector<std::uint64_t> GameSeeds(std::uint64_t run_seed, SeedStream stream,
                                     std::uint64_t first, int count);

// Two agents trained against each other, each with its own optimizer and
// baseline.
class PairedTrainer {
 public:
  explicit PairedTrainer(const TrainConfig& config);

  using Sink = std::function<void(const MetricsRow&)>;

  // Initial evaluation, then `episodes` updates with an evaluation every
  // eval_interval episodes.
  void Run(const Sink& sink);
  BatchMetrics TrainEpisode(int episode);
  // Greedy play on the held-out games.
  std::vector<Trajectory> Evaluate();
  std::vector<Trajectory> Play(std::span<const std::uint64_t> seeds);

  Agent<float>& agent(Role role) { return role == Role::kA ? *a_ : *b_; }
  const BaselineState& baseline(Role role) const {
    return baselines_[Index(role)];
  }
  const TrainConfig& config() const { return config_; }
  const std::vector<std::uint64_t>& test_seeds() const { return test_seeds_; }

 private:
  TrainConfig config_;
  std::unique_ptr<Agent<float>> a_;
  std::unique_ptr<Agent<float>> b_;
  std::array<diff::AdamState<float>, 2> optimizers_;
  std::array<BaselineState, 2> baselines_;
  std::vector<std::uint64_t> test_seeds_;
};

}  // namespace negotiate

#endif  // NEGOTIATE_TRAINER_H_
