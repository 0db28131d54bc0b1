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

#include "negotiate/run.h"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include "json.hpp"
#include "negotiate/analysis.h"
#include "negotiate/diff/checkpoint.h"
#include "negotiate/experiments.h"
#include "negotiate/transcript.h"

namespace negotiate {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

class MetricsWriter {
 public:
  explicit MetricsWriter(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_ << MetricsCsvHeader() << '\n';
  }
  void Write(const MetricsRow& row) {
    out_ << FormatMetricsRow(row) << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("metrics write failed");
  }

 private:
  std::ofstream out_;
};

ordered_json SpreadJson(const Spread& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"std", s.std},
          {"q25", s.q25},     {"q75", s.q75}};
}

ordered_json MetricsJson(const BatchMetrics& m) {
  return {{"mean_score_a", m.mean_score_a},
          {"mean_score_b", m.mean_score_b},
          {"joint_optimality", m.joint_optimality},
          {"mean_turns", m.mean_turns},
          {"agreement_rate", m.agreement_rate},
          {"entropy_term", m.entropy_term},
          {"entropy_utt", m.entropy_utt},
          {"entropy_prop", m.entropy_prop}};
}

std::string CheckpointMeta(const RunConfig& config, std::uint64_t seed,
                           int episode) {
  ordered_json meta = {{"seed", seed},
                       {"episode", episode},
                       {"experiment", ExperimentName(config.experiment)},
                       {"ids", config.ids}};
  return meta.dump();
}

fs::path SeedDir(const RunConfig& config, std::uint64_t seed) {
  return fs::path(config.out) / ("seed_" + std::to_string(seed));
}

// Runs `job(i)` for every index, with up to `workers` threads. Rethrows the
// first failure.
template <typename Job>
void ForEachSeed(std::size_t count, int workers, const Job& job) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (int w = 0; w < workers && w < static_cast<int>(count); ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::string TurnOptimalityCsv(std::span<const TurnOptimality> rows) {
  std::string s = "turn,count,mean,std,q25,q75\n";
  char buf[160];
  for (const TurnOptimality& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f,%.6f\n", r.turn,
                  r.optimality.count, r.optimality.mean, r.optimality.std,
                  r.optimality.q25, r.optimality.q75);
    s += buf;
  }
  return s;
}

void RunPaired(const RunConfig& config, std::ostream& log) {
  std::vector<PairedResult> results(config.seeds.size());
  std::mutex log_mutex;
  ForEachSeed(config.seeds.size(), config.workers, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    const fs::path dir = SeedDir(config, seed);
    fs::create_directories(dir / "checkpoints");
    MetricsWriter metrics(dir / "metrics.csv");
    auto save = [&](PairedTrainer& trainer, const std::string& name,
                    int episode) {
      diff::Checkpoint ckpt;
      ckpt.metadata = CheckpointMeta(config, seed, episode);
      diff::AppendParameters(ckpt, trainer.agent(Role::kA).params(), "agent_a/");
      diff::AppendParameters(ckpt, trainer.agent(Role::kB).params(), "agent_b/");
      diff::SaveCheckpoint(dir / "checkpoints" / name, ckpt);
    };
    PairedOptions options;
    options.final_batches = config.final_batches;
    options.on_row = [&](PairedTrainer& trainer, const MetricsRow& row) {
      metrics.Write(row);
      if (row.eval && config.checkpoint_interval > 0 && row.episode > 0 &&
          row.episode % config.checkpoint_interval == 0) {
        save(trainer, "episode_" + std::to_string(row.episode) + ".ckpt",
             row.episode);
      }
    };
    options.on_done = [&](PairedTrainer& trainer) {
      save(trainer, "final.ckpt", config.episodes);
    };
    const TrainConfig train = MakeTrainConfig(config, seed);
    results[i] = config.experiment == Experiment::kPairedFixedHorizon
                     ? RunPairedFixedHorizonSeed(train, options)
                     : RunPairedSeed(train, options);
    TranscriptWriter transcripts(dir / "transcripts.jsonl");
    for (const Trajectory& t : results[i].final_games) {
      transcripts.Write(t.ToTranscript());
    }
    WriteFile(dir / "proposal_optimality.csv",
              TurnOptimalityCsv(results[i].per_turn));
    std::lock_guard<std::mutex> lock(log_mutex);
    log << "seed " << seed << ": joint optimality "
        << results[i].final_metrics.joint_optimality << ", turns "
        << results[i].final_metrics.mean_turns << '\n';
  });

  const TableRow row = SummarizeSeeds(PairedLabel(config), results);
  WriteFile(fs::path(config.out) / "table.csv",
            TableCsvHeader() + "\n" + FormatTableRow(row) + "\n");
  ordered_json summary;
  summary["label"] = row.label;
  summary["experiment"] = ExperimentName(config.experiment);
  ordered_json seeds = ordered_json::array();
  for (const PairedResult& r : results) {
    ordered_json per_turn = ordered_json::array();
    for (const TurnOptimality& t : r.per_turn) {
      per_turn.push_back({{"turn", t.turn}, {"optimality", SpreadJson(t.optimality)}});
    }
    seeds.push_back({{"seed", r.seed},
                     {"final", MetricsJson(r.final_metrics)},
                     {"modal_final_turn", ModalFinalTurn(r.final_games)},
                     {"proposal_optimality_by_turn", per_turn}});
  }
  summary["seeds"] = seeds;
  summary["table"] = {{"joint_optimality", SpreadJson(row.joint_optimality)},
                      {"turns", SpreadJson(row.turns)},
                      {"agreement_rate", SpreadJson(row.agreement)},
                      {"score_a", SpreadJson(row.score_a)},
                      {"score_b", SpreadJson(row.score_b)}};
  WriteFile(fs::path(config.out) / "summary.json", summary.dump(2) + "\n");
}

void RunCommunity(const RunConfig& config, std::ostream& log) {
  std::vector<CommunityResult> results(config.seeds.size());
  std::mutex log_mutex;
  ForEachSeed(config.seeds.size(), config.workers, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    const fs::path dir = SeedDir(config, seed);
    fs::create_directories(dir / "checkpoints");
    MetricsWriter metrics(dir / "metrics.csv");
    auto save = [&](CommunityTrainer& trainer, const std::string& name,
                    int episode) {
      diff::Checkpoint ckpt;
      ckpt.metadata = CheckpointMeta(config, seed, episode);
      diff::AppendParameters(ckpt, trainer.fixed_agent().params(), "fixed/");
      for (int m = 0; m < config.community_size; ++m) {
        diff::AppendParameters(ckpt, trainer.member(m).params(),
                               "member_" + std::to_string(m) + "/");
      }
      diff::SaveCheckpoint(dir / "checkpoints" / name, ckpt);
    };
    CommunityOptions options;
    options.on_row = [&](CommunityTrainer& trainer, const MetricsRow& row) {
      metrics.Write(row);
      if (row.eval && config.checkpoint_interval > 0 && row.episode > 0 &&
          row.episode % config.checkpoint_interval == 0) {
        save(trainer, "episode_" + std::to_string(row.episode) + ".ckpt",
             row.episode);
      }
    };
    options.on_done = [&](CommunityTrainer& trainer) {
      save(trainer, "final.ckpt", config.episodes);
      if (!config.ids || config.community_size < 3) return;
      const diff::Parameter<float>* table =
          trainer.fixed_agent().params().Find("opponent_ids");
      Eigen::MatrixXd rows = table->value.cast<double>();
      const EmbeddingGeometry g = WhitenedPca(rows);
      const std::vector<int> clusters = KMeans(g.coords, 2);
      std::vector<std::string> tags;
      for (int m = 0; m < config.community_size; ++m) {
        tags.emplace_back(SocialityName(trainer.member_scheme(m)));
      }
      WriteFile(dir / "pca.csv", PcaCsv(g, tags, clusters));
    };
    results[i] = RunCommunitySeed(MakeCommunityConfig(config, seed), options);
    TranscriptWriter transcripts(dir / "transcripts.jsonl");
    for (const Trajectory& t : results[i].final_eval.games) {
      transcripts.Write(t.ToTranscript());
    }
    std::lock_guard<std::mutex> lock(log_mutex);
    log << "seed " << seed << ": fixed-agent objective "
        << results[i].objective.mean << " +- " << results[i].objective.std
        << '\n';
  });

  std::vector<double> means;
  ordered_json seeds = ordered_json::array();
  for (const CommunityResult& r : results) {
    means.push_back(r.objective.mean);
    seeds.push_back({{"seed", r.seed},
                     {"objective", SpreadJson(r.objective)},
                     {"final", MetricsJson(r.final_eval.metrics)}});
  }
  const Spread over_seeds = Describe(means);
  std::vector<double> all;
  for (const CommunityResult& r : results) {
    all.insert(all.end(), r.final_eval.objective.begin(),
               r.final_eval.objective.end());
  }
  const Spread over_games = Describe(all);
  const std::string label =
      std::string(SocialityName(config.fixed_sociality)) + "-fixed-" +
      (config.fixed_role == Role::kA ? "A" : "B") + "/" +
      std::to_string(config.n_prosocial) + "-prosocial/" +
      (config.ids ? "ids" : "no-ids") + "/" +
      std::string(ChannelName(config.channel));
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f\n", label.c_str(),
                over_seeds.count, over_games.mean, over_games.std,
                over_seeds.mean, over_seeds.std);
  WriteFile(fs::path(config.out) / "table.csv",
            std::string("label,seeds,objective_mean,objective_std,"
                        "seed_mean,seed_std\n") + buf);
  ordered_json summary;
  summary["label"] = label;
  summary["experiment"] = ExperimentName(config.experiment);
  summary["seeds"] = seeds;
  summary["table"] = {{"objective_over_games", SpreadJson(over_games)},
                      {"objective_over_seeds", SpreadJson(over_seeds)}};
  WriteFile(fs::path(config.out) / "summary.json", summary.dump(2) + "\n");
}

int RunAnalyze(const RunConfig& config, std::ostream& log) {
  if (config.inputs.empty() && config.checkpoint.empty()) {
    log << "analyze: no --input transcripts or --checkpoint given\n";
    return kExitUsage;
  }
  const fs::path out(config.out);
  ordered_json summary;
  summary["experiment"] = "analyze";

  std::vector<TranscriptRecord> all;
  std::vector<BigramCounts> per_input;
  for (const std::string& path : config.inputs) {
    std::vector<TranscriptRecord> records = ReadTranscripts(path);
    if (records.empty()) {
      log << "analyze: " << path << " holds no transcripts; nothing to do\n";
      return kExitUsage;
    }
    per_input.push_back(ComputeSymbolStats(records).Bigrams());
    all.insert(all.end(), records.begin(), records.end());
  }

  if (!all.empty()) {
    const SymbolStats stats = ComputeSymbolStats(all);
    WriteFile(out / "unigram.csv", UnigramCsv(stats));
    WriteFile(out / "bigram.csv", BigramCsv(stats));
    summary["games"] = all.size();
    summary["top_symbol_share"] = stats.TopSymbolShare();

    if (per_input.size() >= 2) {
      const auto rho = BigramRankCorrelationMatrix(per_input);
      std::string csv = "input";
      for (std::size_t j = 0; j < rho.size(); ++j) csv += "," + std::to_string(j);
      csv += "\n";
      for (std::size_t i = 0; i < rho.size(); ++i) {
        csv += std::to_string(i);
        for (const auto& v : rho[i]) {
          char buf[32];
          if (v) {
            std::snprintf(buf, sizeof(buf), ",%.6f", *v);
          } else {
            std::snprintf(buf, sizeof(buf), ",");
          }
          csv += buf;
        }
        csv += "\n";
      }
      WriteFile(out / "spearman.csv", csv);
    }

    const ProbeDataset data = MakeProbeDataset(all);
    if (static_cast<int>(data.examples.size()) >=
        std::max(kMinProbeExamples, config.probe_folds)) {
      ProbeOptions options;
      options.epochs = config.probe_epochs;
      options.folds = config.probe_folds;
      options.seed = config.seeds.empty() ? 0 : config.seeds.front();
      std::vector<std::pair<std::string, ProbeResult>> rows;
      rows.emplace_back("transcripts", TrainProbe(data, options));
      rows.emplace_back("zero_inputs", TrainProbe(ZeroInputs(data), options));
      rows.emplace_back("shuffled_labels",
                        TrainProbe(ShuffleLabels(data, options.seed), options));
      WriteFile(out / "probe.csv", ProbeCsv(rows));
      for (const auto& [name, r] : rows) {
        summary["probe"][name] = {{"utility_a", r.utility_a},
                                  {"utility_b", r.utility_b},
                                  {"allocation", r.allocation}};
      }
    } else {
      log << "analyze: only " << data.examples.size()
          << " agreed games; probe skipped\n";
      summary["probe"] = nullptr;
    }
  }

  if (!config.checkpoint.empty()) {
    const diff::Checkpoint ckpt = diff::LoadCheckpoint(config.checkpoint);
    const Eigen::MatrixXd rows = CheckpointMatrix(ckpt, "fixed/opponent_ids");
    const EmbeddingGeometry g = WhitenedPca(rows);
    const std::vector<int> clusters = KMeans(g.coords, 2);
    std::vector<std::string> tags(rows.rows());
    WriteFile(out / "pca.csv", PcaCsv(g, tags, clusters));
    summary["pca_silhouette"] = Silhouette(g.coords, clusters);
  }
  WriteFile(out / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

std::string PairedLabel(const RunConfig& config) {
  return std::string(SocialityName(config.sociality[0])) + "-" +
         std::string(SocialityName(config.sociality[1])) + "/" +
         std::string(ChannelName(config.channel));
}

int Run(const RunConfig& config, std::ostream& log) {
  try {
    Validate(config);
    fs::create_directories(config.out);
    WriteFile(fs::path(config.out) / "config.json", ToJson(config) + "\n");
    switch (config.experiment) {
      case Experiment::kPaired:
      case Experiment::kPairedFixedHorizon:
        RunPaired(config, log);
        return kExitOk;
      case Experiment::kCommunity:
        RunCommunity(config, log);
        return kExitOk;
      case Experiment::kAnalyze:
        return RunAnalyze(config, log);
    }
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int Main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& log) {
  ParseResult parsed;
  try {
    parsed = ParseCommandLine(argc, argv, out, log);
  } catch (const ConfigError& e) {
    log << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (parsed.exit) return parsed.exit_code;
  return Run(parsed.config, log);
}

}  // namespace negotiate
