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

#include "negotiate/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace negotiate {
namespace {

double Quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string FormatSpread(const Spread& s) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f", s.mean, s.std, s.q25,
                s.q75);
  return buf;
}

}  // namespace

Spread Describe(std::span<const double> values) {
  Spread s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (s.count - 1));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.q25 = Quantile(sorted, 0.25);
  s.q75 = Quantile(sorted, 0.75);
  return s;
}

std::vector<TurnOptimality> ProposalOptimalityByTurn(
    std::span<const Trajectory> games) {
  std::map<int, std::vector<double>> by_turn;
  for (const Trajectory& g : games) {
    for (std::size_t t = 0; t < g.turns.size(); ++t) {
      const TurnLog& log = g.turns[t];
      if (log.action.terminate) continue;
      by_turn[static_cast<int>(t) + 1].push_back(
          ProposalOptimality(g.initial, log.action.proposal, log.agent));
    }
  }
  std::vector<TurnOptimality> out;
  for (const auto& [turn, values] : by_turn) {
    out.push_back({turn, Describe(values)});
  }
  return out;
}

int ModalFinalTurn(std::span<const Trajectory> games) {
  std::array<int, kMaxTurns + 1> counts{};
  for (const Trajectory& g : games) ++counts[g.turns_taken()];
  int best = 0;
  for (int t = 1; t <= kMaxTurns; ++t) {
    if (counts[t] > counts[best]) best = t;
  }
  return best;
}

PairedResult RunPairedSeed(const TrainConfig& config,
                           const PairedOptions& options) {
  PairedTrainer trainer(config);
  PairedResult result;
  result.seed = config.seed;
  trainer.Run([&](const MetricsRow& row) {
    result.rows.push_back(row);
    if (options.on_row) options.on_row(trainer, row);
  });
  if (options.on_done) options.on_done(trainer);
  const std::vector<std::uint64_t> seeds =
      GameSeeds(config.seed, SeedStream::kFinal, 0,
                std::max(options.final_batches, 0) * config.batch_size);
  if (!seeds.empty()) result.final_games = trainer.Play(seeds);
  result.final_metrics = Summarize(result.final_games);
  result.per_turn = ProposalOptimalityByTurn(result.final_games);
  return result;
}

PairedResult RunPairedFixedHorizonSeed(TrainConfig config,
                                       const PairedOptions& options) {
  config.env.fixed_horizon = true;
  return RunPairedSeed(config, options);
}

TableRow SummarizeSeeds(std::string label,
                        std::span<const PairedResult> results) {
  std::vector<double> joint, turns, agree, a, b;
  for (const PairedResult& r : results) {
    joint.push_back(r.final_metrics.joint_optimality);
    turns.push_back(r.final_metrics.mean_turns);
    agree.push_back(r.final_metrics.agreement_rate);
    a.push_back(r.final_metrics.mean_score_a);
    b.push_back(r.final_metrics.mean_score_b);
  }
  return {std::move(label), Describe(joint), Describe(turns), Describe(agree),
          Describe(a), Describe(b)};
}

std::string TableCsvHeader() {
  std::string h = "label,seeds";
  for (const char* name :
       {"joint", "turns", "agreement", "score_a", "score_b"}) {
    for (const char* stat : {"mean", "std", "q25", "q75"}) {
      h += std::string(",") + name + "_" + stat;
    }
  }
  return h;
}

std::string FormatTableRow(const TableRow& row) {
  return row.label + "," + std::to_string(row.joint_optimality.count) + "," +
         FormatSpread(row.joint_optimality) + "," + FormatSpread(row.turns) +
         "," + FormatSpread(row.agreement) + "," + FormatSpread(row.score_a) +
         "," + FormatSpread(row.score_b);
}

void ValidateCommunityConfig(const CommunityConfig& config) {
  if (config.community_size < 1) {
    throw std::invalid_argument("community: size must be positive");
  }
  if (config.n_prosocial < 1 || config.n_prosocial > config.community_size) {
    throw std::invalid_argument(
        "community: n_prosocial must be in [1, community size]");
  }
  if (config.batch_size <= 0 || config.episodes < 0 ||
      config.eval_interval <= 0 || config.test_batches <= 0) {
    throw std::invalid_argument("community: non-positive size");
  }
}

CommunityTrainer::CommunityTrainer(const CommunityConfig& config)
    : config_((ValidateCommunityConfig(config), config)),
      sampler_(config.community_size,
               StreamSeed(config.seed, SeedStream::kCommunity)) {
  AgentConfig fixed_config = config.agent;
  fixed_config.num_opponent_ids = config.ids_given ? config.community_size : 0;
  AgentConfig member_config = config.agent;
  member_config.num_opponent_ids = 0;

  fixed_ = std::make_unique<Agent<float>>(
      fixed_config, StreamSeed(config.seed, SeedStream::kInitA));
  fixed_optimizer_ = diff::MakeAdamState(fixed_->params(), config.adam);
  fixed_baseline_.smoothing = config.baseline_smoothing;
  for (int m = 0; m < config.community_size; ++m) {
    members_.push_back(std::make_unique<Agent<float>>(
        member_config, StreamSeed(config.seed, SeedStream::kMember, m)));
    member_optimizers_.push_back(
        diff::MakeAdamState(members_.back()->params(), config.adam));
    member_baselines_.push_back({0.0, config.baseline_smoothing});
  }
  test_seeds_ = GameSeeds(config.seed, SeedStream::kTest, 0,
                          config.test_batches * config.batch_size);
}

EnvConfig CommunityTrainer::MatchEnv(int member) const {
  EnvConfig env;
  env.channel = config_.channel;
  const int fixed = Index(config_.fixed_role);
  env.schemes[fixed] = config_.fixed_scheme;
  env.schemes[1 - fixed] = member_scheme(member);
  if (config_.ids_given) env.opponent_ids[fixed] = member;
  return env;
}

Rollout<float> CommunityTrainer::Play(int member,
                                      std::span<const std::uint64_t> seeds,
                                      ActMode mode) {
  Agent<float>& opponent = *members_.at(member);
  if (config_.fixed_role == Role::kA) {
    return RolloutBatch(*fixed_, opponent, MatchEnv(member), seeds, mode);
  }
  return RolloutBatch(opponent, *fixed_, MatchEnv(member), seeds, mode);
}

int CommunityTrainer::TrainEpisode(int episode, BatchMetrics* metrics) {
  const int member = sampler_.Next();
  const std::vector<std::uint64_t> seeds = GameSeeds(
      config_.seed, SeedStream::kTrain,
      static_cast<std::uint64_t>(episode) * config_.batch_size,
      config_.batch_size);
  Rollout<float> rollout = Play(member, seeds, ActMode::kSample);
  const std::array<Learner<float>, 2> learners = {
      Learner<float>{fixed_.get(), &fixed_optimizer_, &fixed_baseline_,
                     config_.fixed_role},
      Learner<float>{members_[member].get(), &member_optimizers_[member],
                     &member_baselines_[member], Other(config_.fixed_role)}};
  ReinforceUpdate<float>(rollout, learners, config_.entropy);
  if (metrics != nullptr) *metrics = Summarize(rollout.games);
  return member;
}

CommunityEval CommunityTrainer::Evaluate() {
  CommunityEval eval;
  const int fixed = Index(config_.fixed_role);
  for (int batch = 0; batch < config_.test_batches; ++batch) {
    const int member = batch % config_.n_prosocial;
    std::span<const std::uint64_t> seeds(
        test_seeds_.data() + static_cast<std::size_t>(batch) * config_.batch_size,
        config_.batch_size);
    Rollout<float> rollout = Play(member, seeds, ActMode::kGreedy);
    for (Trajectory& t : rollout.games) {
      eval.objective.push_back(config_.fixed_scheme.is_prosocial()
                                   ? t.joint_optimality
                                   : t.scores[fixed]);
      eval.games.push_back(std::move(t));
    }
  }
  eval.metrics = Summarize(eval.games);
  return eval;
}

void CommunityTrainer::Run(const Sink& sink) {
  auto eval = [&](int episode) {
    const CommunityEval e = Evaluate();
    if (sink) sink({episode, true, e.metrics});
  };
  eval(0);
  for (int e = 1; e <= config_.episodes; ++e) {
    BatchMetrics m;
    TrainEpisode(e - 1, &m);
    if (sink && config_.train_log_interval > 0 &&
        e % config_.train_log_interval == 0) {
      sink({e, false, m});
    }
    if (e % config_.eval_interval == 0 || e == config_.episodes) eval(e);
  }
}

CommunityResult RunCommunitySeed(const CommunityConfig& config,
                                 const CommunityOptions& options) {
  CommunityTrainer trainer(config);
  CommunityResult result;
  result.seed = config.seed;
  trainer.Run([&](const MetricsRow& row) {
    result.rows.push_back(row);
    if (options.on_row) options.on_row(trainer, row);
  });
  if (options.on_done) options.on_done(trainer);
  result.final_eval = trainer.Evaluate();
  result.objective = Describe(result.final_eval.objective);
  return result;
}

}  // namespace negotiate
