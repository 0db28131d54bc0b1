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

// Post-hoc analysis of transcripts and trained embeddings.

#ifndef NEGOTIATE_ANALYSIS_H_
#define NEGOTIATE_ANALYSIS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "negotiate/diff/checkpoint.h"
#include "negotiate/env.h"
#include "negotiate/transcript.h"

namespace negotiate {

using BigramCounts = std::array<std::array<long, kVocabSize>, kVocabSize>;

struct SymbolStats {
  // unigram[role][turn - 1][position][symbol]
  std::array<std::array<std::array<std::array<long, kVocabSize>,
                                    kUtteranceLength>,
                         kMaxTurns>,
             2>
      unigram{};
  // bigram[role][first][second], adjacent positions within one utterance.
  std::array<BigramCounts, 2> bigram{};
  long utterances = 0;

  bool empty() const { return utterances == 0; }
  // Symbol counts over turns and positions; both roles if none given.
  std::array<long, kVocabSize> SymbolTotals(
      std::optional<Role> role = std::nullopt) const;
  // Share of the most frequent symbol; 0 when empty.
  double TopSymbolShare(std::optional<Role> role = std::nullopt) const;
  BigramCounts Bigrams(std::optional<Role> role = std::nullopt) const;
};

SymbolStats ComputeSymbolStats(std::span<const TranscriptRecord> records);

struct RankedBigram {
  int first = 0;
  int second = 0;
  long count = 0;
};

// Nonzero bigrams, most frequent first; ties by (first, second).
std::vector<RankedBigram> RankBigrams(const BigramCounts& counts);

// Spearman correlation of the bigram ranks over the union of bigrams seen in
// either list. Ties get the mean rank; bigrams absent from one list are tied
// last in it. Missing when either rank vector is constant.
std::optional<double> BigramRankCorrelation(const BigramCounts& x,
                                            const BigramCounts& y);

// Symmetric, unit diagonal.
std::vector<std::vector<std::optional<double>>> BigramRankCorrelationMatrix(
    std::span<const BigramCounts> stats);

std::string UnigramCsv(const SymbolStats& stats);
std::string BigramCsv(const SymbolStats& stats);

inline constexpr int kProbeSeparator = kVocabSize;  // after each turn
inline constexpr int kProbeTargets = 3 * kNumItems;

struct ProbeExample {
  std::vector<int> transcript;  // symbols of all turns, separator-terminated
  ItemVector pool{};
  // u_A (3), u_B (3), items agent A receives (3).
  std::array<int, kProbeTargets> labels{};
};

struct ProbeDataset {
  std::vector<ProbeExample> examples;
};

// One example per game that ended in a valid agreement.
ProbeDataset MakeProbeDataset(std::span<const TranscriptRecord> records);
// Transcript symbols and pool replaced by 0; lengths and labels kept.
ProbeDataset ZeroInputs(const ProbeDataset& data);
ProbeDataset ShuffleLabels(const ProbeDataset& data, std::uint64_t seed);

int ProbeClasses(int target);  // 11 for utilities, 6 for allocations

struct ProbeOptions {
  int embed_dim = 32;
  int hidden_dim = 64;
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int folds = 10;
  std::uint64_t seed = 0;
};

inline constexpr int kMinProbeExamples = 10;

struct ProbeResult {
  int examples = 0;
  // Test-fold exact-match accuracy per target, averaged over folds.
  std::array<double, kProbeTargets> accuracy{};
  double utility_a = 0.0;
  double utility_b = 0.0;
  double allocation = 0.0;
};

// k-fold cross-validated probe: an LSTM over the transcript and another over
// the pool, concatenated, then one linear softmax classifier per target.
// Throws std::invalid_argument with fewer than kMinProbeExamples examples or
// fewer examples than folds.
ProbeResult TrainProbe(const ProbeDataset& data, const ProbeOptions& options);

std::string ProbeCsv(std::span<const std::pair<std::string, ProbeResult>> rows);

struct EmbeddingGeometry {
  Eigen::MatrixXd coords;           // n x 2
  Eigen::Vector2d eigenvalues;      // of the two leading components
};

// Centres the rows, projects them onto the two leading principal components
// and scales each to unit variance. Throws std::invalid_argument with fewer
// than 3 rows.
EmbeddingGeometry WhitenedPca(const Eigen::MatrixXd& rows);

// Rows of a 2-D checkpoint entry. Throws std::runtime_error if missing.
Eigen::MatrixXd CheckpointMatrix(const diff::Checkpoint& ckpt,
                                 const std::string& name);

// Lloyd's algorithm with farthest-point initialisation from row 0.
std::vector<int> KMeans(const Eigen::MatrixXd& points, int k,
                        int max_iterations = 100);
// Mean silhouette coefficient; 0 when there is a single cluster.
double Silhouette(const Eigen::MatrixXd& points, std::span<const int> labels);
// Fraction of points whose true label is their cluster's majority label.
double ClusterPurity(std::span<const int> clusters, std::span<const int> truth);

std::string PcaCsv(const EmbeddingGeometry& geometry,
                   std::span<const std::string> tags,
                   std::span<const int> clusters);

}  // namespace negotiate

#endif  // NEGOTIATE_ANALYSIS_H_
