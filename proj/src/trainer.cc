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

#include "negotiate/trainer.h"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace negotiate {

TranscriptRecord Trajectory::ToTranscript() const {
  TranscriptRecord rec;
  rec.seed = seed;
  rec.pool = initial.pool;
  rec.util_a = initial.utility(Role::kA);
  rec.util_b = initial.utility(Role::kB);
  rec.n_limit = initial.turn_limit;
  rec.channel = initial.channel;
  for (const TurnLog& t : turns) {
    rec.turns.push_back(
        {t.agent, t.action.terminate, t.action.message, t.action.proposal});
  }
  rec.raw_rewards = {raw.a, raw.b};
  rec.scaled_scores = scores;
  return rec;
}

template <typename S>
Rollout<S> RolloutBatch(Agent<S>& agent_a, Agent<S>& agent_b,
                        const EnvConfig& env,
                        std::span<const std::uint64_t> game_seeds,
                        ActMode mode) {
  if (mode == ActMode::kReplay) {
    throw std::invalid_argument("RolloutBatch: replay is not a rollout mode");
  }
  const int B = static_cast<int>(game_seeds.size());
  if (B == 0) throw std::invalid_argument("RolloutBatch: no games");
  Rollout<S> out;
  out.tape = std::make_unique<diff::Tape<S>>(mode == ActMode::kSample);
  diff::Tape<S>& tape = *out.tape;
  out.games.resize(B);

  std::vector<Rng> rngs;
  rngs.reserve(B);
  std::vector<GameState> states(B);
  for (int g = 0; g < B; ++g) {
    rngs.emplace_back(game_seeds[g]);
    states[g] = NewGame(rngs[g], env.channel, env.fixed_horizon);
    out.games[g].seed = game_seeds[g];
    out.games[g].initial = states[g];
  }

  std::array<Agent<S>*, 2> agents = {&agent_a, &agent_b};
  std::array<diff::Var, 2> contexts;
  for (Role role : {Role::kA, Role::kB}) {
    std::vector<Observation> obs;
    obs.reserve(B);
    for (const GameState& s : states) {
      obs.push_back(Observe(s, role, env.opponent_ids[Index(role)]));
    }
    contexts[Index(role)] = agents[Index(role)]->EncodeContexts(tape, obs);
  }

  const bool decode =
      LinguisticChannelOpen(env.channel) || env.decode_closed_utterances;
  for (int turn = 1; turn <= kMaxTurns; ++turn) {
    std::vector<int> active;
    for (int g = 0; g < B; ++g) {
      if (!states[g].over()) active.push_back(g);
    }
    if (active.empty()) break;
    const Role role = ActingRole(turn);
    const int r = Index(role);

    std::vector<Observation> obs;
    std::vector<Rng*> rng_ptrs;
    obs.reserve(active.size());
    for (int g : active) {
      obs.push_back(Observe(states[g], role, env.opponent_ids[r]));
      rng_ptrs.push_back(&rngs[g]);
    }
    const diff::Var context =
        static_cast<int>(active.size()) == B
            ? contexts[r]
            : tape.Gather(contexts[r], active);

    ActOptions options;
    options.mode = mode;
    options.decode_utterance = decode;
    if (mode == ActMode::kSample) options.rngs = rng_ptrs;
    BatchAct<S> act = agents[r]->Act(tape, obs, options, context);

    for (std::size_t i = 0; i < active.size(); ++i) {
      const int g = active[i];
      Action action = act.actions[i];
      if (turn == 1) action.terminate = false;
      out.games[g].turns.push_back(
          {role, action, act.log_prob[i], act.entropy[i]});
      Step(states[g], action);
    }
    out.turn_batches.push_back({role, turn, std::move(active), act.heads});
  }

  for (int g = 0; g < B; ++g) {
    Trajectory& t = out.games[g];
    t.final_state = states[g];
    t.raw = ComputeRewards(states[g]);
    for (Role role : {Role::kA, Role::kB}) {
      t.scores[Index(role)] =
          ScaledReward(t.raw, states[g], role, env.schemes[Index(role)]);
    }
    t.joint_optimality = JointScore(t.raw, states[g]);
  }
  return out;
}

template <typename S>
void AttachReinforceObjective(Rollout<S>& rollout, Role role,
                              std::span<const double> rewards, double baseline,
                              const EntropyWeights& weights) {
  const std::size_t num_games = rollout.games.size();
  if (rewards.size() != num_games) {
    throw std::invalid_argument("AttachReinforceObjective: one reward per game");
  }
  if (!rollout.tape || !rollout.tape->recording()) {
    throw std::logic_error("AttachReinforceObjective: rollout was not recorded");
  }
  diff::Tape<S>& tape = *rollout.tape;
  const double inv_batch = 1.0 / static_cast<double>(num_games);
  std::vector<S> d_logp;
  std::vector<S> d_ent;
  for (const auto& tb : rollout.turn_batches) {
    if (tb.role != role) continue;
    const std::size_t n = tb.games.size();
    std::vector<S> advantage(n);
    for (std::size_t i = 0; i < n; ++i) {
      advantage[i] =
          static_cast<S>(-(rewards[tb.games[i]] - baseline) * inv_batch);
    }
    auto set = [&](diff::HeadId head, double lambda, bool use_logp,
                   const std::vector<char>* active) {
      d_logp.assign(n, S(0));
      d_ent.assign(n, S(0));
      for (std::size_t i = 0; i < n; ++i) {
        if (active != nullptr && !(*active)[i]) continue;
        if (use_logp) d_logp[i] = advantage[i];
        d_ent[i] = static_cast<S>(-lambda * inv_batch);
      }
      tape.SetHeadCoefficients(head, d_logp, d_ent);
    };
    set(tb.heads.term, weights.term, tb.turn != 1, nullptr);
    for (const diff::HeadId& h : tb.heads.prop) set(h, weights.prop, true, nullptr);
    for (std::size_t k = 0; k < tb.heads.utt.size(); ++k) {
      set(tb.heads.utt[k], weights.utt, true, &tb.heads.utt_active[k]);
    }
  }
}

template <typename S>
void ReinforceUpdate(Rollout<S>& rollout, std::span<const Learner<S>> learners,
                     const EntropyWeights& weights) {
  const std::size_t num_games = rollout.games.size();
  std::vector<std::vector<double>> rewards(learners.size());
  for (std::size_t l = 0; l < learners.size(); ++l) {
    const Learner<S>& learner = learners[l];
    learner.agent->params().ZeroGrad();
    rewards[l].resize(num_games);
    for (std::size_t g = 0; g < num_games; ++g) {
      rewards[l][g] = rollout.games[g].scores[Index(learner.role)];
    }
  }
  for (std::size_t l = 0; l < learners.size(); ++l) {
    AttachReinforceObjective(rollout, learners[l].role, rewards[l],
                             learners[l].baseline->value, weights);
  }
  rollout.tape->Backward();
  for (std::size_t l = 0; l < learners.size(); ++l) {
    const Learner<S>& learner = learners[l];
    diff::AdamStep(*learner.optimizer, learner.agent->params());
    double mean = 0.0;
    for (double r : rewards[l]) mean += r;
    learner.baseline->Update(mean / static_cast<double>(num_games));
  }
}

BatchMetrics Summarize(std::span<const Trajectory> games) {
  BatchMetrics m;
  if (games.empty()) return m;
  long turns = 0;
  for (const Trajectory& t : games) {
    m.mean_score_a += t.scores[0];
    m.mean_score_b += t.scores[1];
    m.joint_optimality += t.joint_optimality;
    m.mean_turns += t.turns_taken();
    m.agreement_rate += t.agreed() ? 1.0 : 0.0;
    for (const TurnLog& log : t.turns) {
      m.entropy_term += log.entropy.term;
      m.entropy_utt += log.entropy.utt;
      m.entropy_prop += log.entropy.prop;
      ++turns;
    }
  }
  const double n = static_cast<double>(games.size());
  m.mean_score_a /= n;
  m.mean_score_b /= n;
  m.joint_optimality /= n;
  m.mean_turns /= n;
  m.agreement_rate /= n;
  if (turns > 0) {
    m.entropy_term /= turns;
    m.entropy_utt /= turns;
    m.entropy_prop /= turns;
  }
  return m;
}

std::string MetricsCsvHeader() {
  return "episode,eval_flag,mean_score_a,mean_score_b,joint_optimality,"
         "mean_turns,agreement_rate,entropy_term,entropy_utt,entropy_prop";
}

std::string FormatMetricsRow(const MetricsRow& row) {
  const BatchMetrics& m = row.metrics;
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f,%.4f,%.6f,%.6f,%.6f,%.6f",
                row.episode, row.eval ? 1 : 0, m.mean_score_a,
                m.mean_score_b, m.joint_optimality, m.mean_turns,
                m.agreement_rate, m.entropy_term, m.entropy_utt,
                m.entropy_prop);
  return buf;
}

std::uint64_t StreamSeed(std::uint64_t run_seed, SeedStream stream,
                         std::uint64_t index) {
  return MixSeed(MixSeed(run_seed, static_cast<std::uint64_t>(stream)), index);
}

std::vector<std::uint64_t> GameSeeds(std::uint64_t run_seed, SeedStream stream,
                                     std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds(std::max(count, 0));
  for (int i = 0; i < count; ++i) seeds[i] = StreamSeed(run_seed, stream, first + i);
  return seeds;
}

PairedTrainer::PairedTrainer(const TrainConfig& config) : config_(config) {
  if (config.batch_size <= 0 || config.episodes < 0 ||
      config.eval_interval <= 0 || config.test_batches <= 0) {
    throw std::invalid_argument("TrainConfig: non-positive size");
  }
  a_ = std::make_unique<Agent<float>>(
      config.agent_a, StreamSeed(config.seed, SeedStream::kInitA));
  b_ = std::make_unique<Agent<float>>(
      config.agent_b, StreamSeed(config.seed, SeedStream::kInitB));
  optimizers_ = {diff::MakeAdamState(a_->params(), config.adam),
                 diff::MakeAdamState(b_->params(), config.adam)};
  for (BaselineState& b : baselines_) b.smoothing = config.baseline_smoothing;
  test_seeds_ = GameSeeds(config.seed, SeedStream::kTest, 0,
                          config.test_batches * config.batch_size);
}

BatchMetrics PairedTrainer::TrainEpisode(int episode) {
  const std::vector<std::uint64_t> seeds = GameSeeds(
      config_.seed, SeedStream::kTrain,
      static_cast<std::uint64_t>(episode) * config_.batch_size,
      config_.batch_size);
  Rollout<float> rollout =
      RolloutBatch(*a_, *b_, config_.env, seeds, ActMode::kSample);
  const std::array<Learner<float>, 2> learners = {
      Learner<float>{a_.get(), &optimizers_[0], &baselines_[0], Role::kA},
      Learner<float>{b_.get(), &optimizers_[1], &baselines_[1], Role::kB}};
  ReinforceUpdate<float>(rollout, learners, config_.entropy);
  return Summarize(rollout.games);
}

std::vector<Trajectory> PairedTrainer::Play(std::span<const std::uint64_t> seeds) {
  std::vector<Trajectory> games;
  games.reserve(seeds.size());
  for (std::size_t start = 0; start < seeds.size();
       start += config_.batch_size) {
    const std::size_t n =
        std::min<std::size_t>(config_.batch_size, seeds.size() - start);
    Rollout<float> rollout = RolloutBatch(*a_, *b_, config_.env,
                                          seeds.subspan(start, n),
                                          ActMode::kGreedy);
    for (Trajectory& t : rollout.games) games.push_back(std::move(t));
  }
  return games;
}

std::vector<Trajectory> PairedTrainer::Evaluate() { return Play(test_seeds_); }

void PairedTrainer::Run(const Sink& sink) {
  auto eval = [&](int episode) {
    const std::vector<Trajectory> games = Evaluate();
    if (sink) sink({episode, true, Summarize(games)});
  };
  eval(0);
  for (int e = 1; e <= config_.episodes; ++e) {
    const BatchMetrics m = TrainEpisode(e - 1);
    if (sink && config_.train_log_interval > 0 &&
        e % config_.train_log_interval == 0) {
      sink({e, false, m});
    }
    if (e % config_.eval_interval == 0 || e == config_.episodes) eval(e);
  }
}

template Rollout<float> RolloutBatch(Agent<float>&, Agent<float>&,
                                     const EnvConfig&,
                                     std::span<const std::uint64_t>, ActMode);
template Rollout<double> RolloutBatch(Agent<double>&, Agent<double>&,
                                      const EnvConfig&,
                                      std::span<const std::uint64_t>, ActMode);
template void AttachReinforceObjective(Rollout<float>&, Role,
                                       std::span<const double>, double,
                                       const EntropyWeights&);
template void AttachReinforceObjective(Rollout<double>&, Role,
                                       std::span<const double>, double,
                                       const EntropyWeights&);
template void ReinforceUpdate(Rollout<float>&, std::span<const Learner<float>>,
                              const EntropyWeights&);
template void ReinforceUpdate(Rollout<double>&,
                              std::span<const Learner<double>>,
                              const EntropyWeights&);

}  // namespace negotiate
