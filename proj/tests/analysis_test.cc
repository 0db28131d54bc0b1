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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "negotiate/analysis.h"
#include "negotiate/diff/checkpoint.h"
#include "negotiate/diff/parameter.h"
#include "negotiate/rng.h"

namespace negotiate {
namespace {

TranscriptRecord Record(std::vector<std::array<int, 6>> messages,
                        bool agree = true) {
  TranscriptRecord r;
  r.pool = MakeItemPool({1, 2, 3});
  r.util_a = MakeUtilities({1, 0, 4});
  r.util_b = MakeUtilities({2, 5, 0});
  for (std::size_t i = 0; i < messages.size(); ++i) {
    TranscriptTurn t;
    t.agent = ActingRole(static_cast<int>(i) + 1);
    t.message = MakeMessage(messages[i]);
    t.proposal = MakeProposal({1, 1, 1});
    t.terminate = agree && i + 1 == messages.size();
    r.turns.push_back(t);
  }
  return r;
}

TEST(SymbolStatsTest, AllDummyMessagesFillOneBin) {
  const std::vector<TranscriptRecord> recs = {Record({{0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}})};
  const SymbolStats s = ComputeSymbolStats(recs);
  EXPECT_EQ(s.utterances, 2);
  EXPECT_EQ(s.SymbolTotals()[0], 12);
  EXPECT_DOUBLE_EQ(s.TopSymbolShare(), 1.0);
  const auto ranked = RankBigrams(s.Bigrams());
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].count, 10);
}

TEST(SymbolStatsTest, HandTalliedCorpus) {
  const std::vector<TranscriptRecord> recs = {
      Record({{1, 1, 2, 3, 3, 3}, {4, 4, 4, 4, 4, 1}}),
      Record({{1, 2, 2, 2, 2, 2}, {5, 5, 4, 4, 4, 4}, {3, 3, 3, 3, 3, 3}}),
  };
  const SymbolStats s = ComputeSymbolStats(recs);
  EXPECT_EQ(s.utterances, 5);
  // Role A, turn 1, position 0: symbol 1 twice.
  EXPECT_EQ(s.unigram[0][0][0][1], 2);
  EXPECT_EQ(s.unigram[0][0][1][1], 1);
  EXPECT_EQ(s.unigram[0][0][1][2], 1);
  EXPECT_EQ(s.unigram[1][1][0][5], 1);
  EXPECT_EQ(s.unigram[0][2][3][3], 1);
  const auto a = s.SymbolTotals(Role::kA);
  EXPECT_EQ(a[1], 3);
  EXPECT_EQ(a[2], 6);
  EXPECT_EQ(a[3], 9);
  const auto b = s.SymbolTotals(Role::kB);
  EXPECT_EQ(b[4], 9);
  EXPECT_EQ(b[5], 2);
  EXPECT_EQ(b[1], 1);
  EXPECT_EQ(s.bigram[0][3][3], 2 + 5);
  EXPECT_EQ(s.bigram[0][2][2], 4);
  EXPECT_EQ(s.bigram[1][4][4], 4 + 3);
  EXPECT_EQ(s.bigram[1][4][1], 1);
  EXPECT_DOUBLE_EQ(s.TopSymbolShare(Role::kB), 9.0 / 12);
}

TEST(SymbolStatsTest, MarginalsMatchTotals) {
  Rng rng(4);
  std::vector<TranscriptRecord> recs;
  for (int g = 0; g < 50; ++g) {
    std::vector<std::array<int, 6>> msgs(rng.UniformInt(1, 10));
    for (auto& m : msgs) {
      for (int& x : m) x = rng.UniformInt(0, 10);
    }
    recs.push_back(Record(msgs));
  }
  const SymbolStats s = ComputeSymbolStats(recs);
  const auto totals = s.SymbolTotals();
  EXPECT_EQ(std::accumulate(totals.begin(), totals.end(), 0L), 6 * s.utterances);
  long bigrams = 0;
  for (const auto& row : s.Bigrams()) bigrams = std::accumulate(row.begin(), row.end(), bigrams);
  EXPECT_EQ(bigrams, 5 * s.utterances);

  std::reverse(recs.begin(), recs.end());
  const SymbolStats t = ComputeSymbolStats(recs);
  EXPECT_EQ(t.unigram, s.unigram);
  EXPECT_EQ(t.bigram, s.bigram);
  EXPECT_TRUE(ComputeSymbolStats({}).empty());
}

TEST(SymbolStatsTest, CsvLayout) {
  const std::vector<TranscriptRecord> recs = {Record({{1, 1, 1, 1, 1, 2}})};
  const SymbolStats s = ComputeSymbolStats(recs);
  EXPECT_EQ(UnigramCsv(s),
            "role,turn,position,symbol,count\n"
            "0,1,0,1,1\n0,1,1,1,1\n0,1,2,1,1\n0,1,3,1,1\n0,1,4,1,1\n0,1,5,2,1\n");
  EXPECT_EQ(BigramCsv(s), "role,rank,first,second,count\n0,1,1,1,4\n0,2,1,2,1\n");
}

BigramCounts Counts(std::vector<std::tuple<int, int, long>> cells) {
  BigramCounts c{};
  for (auto [a, b, n] : cells) c[a][b] = n;
  return c;
}

TEST(SpearmanTest, IdenticalReversedAndDegenerate) {
  const BigramCounts x = Counts({{1, 1, 3}, {1, 2, 2}, {2, 1, 1}});
  const BigramCounts y = Counts({{1, 1, 1}, {1, 2, 2}, {2, 1, 3}});
  EXPECT_DOUBLE_EQ(*BigramRankCorrelation(x, x), 1.0);
  EXPECT_DOUBLE_EQ(*BigramRankCorrelation(x, y), -1.0);
  const BigramCounts flat = Counts({{1, 1, 2}, {1, 2, 2}});
  EXPECT_FALSE(BigramRankCorrelation(flat, flat).has_value());
  EXPECT_FALSE(BigramRankCorrelation(BigramCounts{}, Counts({{0, 0, 1}})).has_value());
}

TEST(SpearmanTest, AbsentBigramsTieLast) {
  // Union {a, b, c}: x = (5, 3, 0) ranks (1, 2, 3); y = (0, 4, 2) ranks (3, 1, 2).
  const BigramCounts x = Counts({{0, 1, 5}, {0, 2, 3}});
  const BigramCounts y = Counts({{0, 2, 4}, {0, 3, 2}});
  EXPECT_DOUBLE_EQ(*BigramRankCorrelation(x, y), -0.5);
  // x = (4, 3, 2, 1) ranks (1, 2, 3, 4); y = (6, 0, 0, 1) ranks (1, 3.5, 3.5, 2):
  // rank deviations (-1.5, -0.5, 0.5, 1.5) and (-1.5, 1, 1, -0.5).
  const BigramCounts u = Counts({{1, 1, 4}, {1, 2, 3}, {1, 3, 2}, {1, 4, 1}});
  const BigramCounts v = Counts({{1, 1, 6}, {1, 4, 1}});
  EXPECT_NEAR(*BigramRankCorrelation(u, v), 1.5 / std::sqrt(5.0 * 4.5), 1e-12);
}

TEST(SpearmanTest, MatrixIsSymmetricWithUnitDiagonal) {
  Rng rng(8);
  std::vector<BigramCounts> stats(4);
  for (auto& s : stats) {
    for (auto& row : s) {
      for (long& c : row) c = rng.UniformInt(0, 3);
    }
  }
  const auto m = BigramRankCorrelationMatrix(stats);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(*m[i][i], 1.0);
    for (int j = 0; j < 4; ++j) {
      ASSERT_TRUE(m[i][j].has_value());
      EXPECT_EQ(*m[i][j], *m[j][i]);
      EXPECT_LE(std::abs(*m[i][j]), 1.0 + 1e-12);
    }
  }
}

TEST(ProbeDatasetTest, OnlyValidAgreements) {
  TranscriptRecord agreed = Record({{1, 2, 3, 4, 5, 6}, {7, 8, 9, 10, 0, 1}});
  TranscriptRecord timeout = Record({{1, 1, 1, 1, 1, 1}}, false);
  TranscriptRecord invalid = agreed;
  invalid.turns[0].proposal = MakeProposal({2, 0, 0});
  const std::vector<TranscriptRecord> recs = {agreed, timeout, invalid};
  const ProbeDataset d = MakeProbeDataset(recs);
  ASSERT_EQ(d.examples.size(), 1u);
  const ProbeExample& ex = d.examples[0];
  EXPECT_EQ(ex.transcript,
            (std::vector<int>{1, 2, 3, 4, 5, 6, kProbeSeparator, 7, 8, 9, 10, 0, 1,
                              kProbeSeparator}));
  EXPECT_EQ(ex.pool, (ItemVector{1, 2, 3}));
  EXPECT_EQ(ex.labels, (std::array<int, 9>{1, 0, 4, 2, 5, 0, 1, 1, 1}));

  const ProbeDataset z = ZeroInputs(d);
  EXPECT_EQ(z.examples[0].transcript.size(), ex.transcript.size());
  EXPECT_TRUE(std::all_of(z.examples[0].transcript.begin(),
                          z.examples[0].transcript.end(), [](int s) { return s == 0; }));
  EXPECT_EQ(z.examples[0].labels, ex.labels);
  EXPECT_EQ(ProbeClasses(0), 11);
  EXPECT_EQ(ProbeClasses(8), 6);
}

TEST(ProbeDatasetTest, ShufflingPermutesLabels) {
  ProbeDataset d;
  for (int i = 0; i < 20; ++i) {
    ProbeExample ex;
    ex.transcript = {i % 11};
    ex.labels.fill(i % 6);
    d.examples.push_back(ex);
  }
  const ProbeDataset s = ShuffleLabels(d, 3);
  std::vector<int> before, after;
  for (int i = 0; i < 20; ++i) {
    before.push_back(d.examples[i].labels[0]);
    after.push_back(s.examples[i].labels[0]);
    EXPECT_EQ(s.examples[i].transcript, d.examples[i].transcript);
  }
  EXPECT_NE(before, after);
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  EXPECT_EQ(before, after);
}

// Transcripts whose first symbol is B's first utility: a probe must find it.
ProbeDataset SyntheticProbeData(int n, std::uint64_t seed) {
  Rng rng(seed);
  ProbeDataset d;
  for (int i = 0; i < n; ++i) {
    ProbeExample ex;
    ex.labels[3] = rng.UniformInt(0, 10);
    ex.transcript = {ex.labels[3], rng.UniformInt(0, 10), kProbeSeparator};
    if (i % 2) ex.transcript.insert(ex.transcript.end(), {3, kProbeSeparator});
    for (int k = 0; k < 3; ++k) ex.pool[k] = rng.UniformInt(0, 5);
    for (int t = 0; t < kProbeTargets; ++t) {
      if (t != 3) ex.labels[t] = rng.UniformInt(0, ProbeClasses(t) - 1);
    }
    d.examples.push_back(ex);
  }
  return d;
}

TEST(ProbeTest, RecoversAnEncodedLabel) {
  const ProbeDataset d = SyntheticProbeData(440, 1);
  ProbeOptions o;
  o.embed_dim = 16;
  o.hidden_dim = 16;
  o.epochs = 40;
  o.folds = 4;
  o.learning_rate = 1e-2;
  const ProbeResult real = TrainProbe(d, o);
  const ProbeResult zero = TrainProbe(ZeroInputs(d), o);
  const ProbeResult shuffled = TrainProbe(ShuffleLabels(d, 5), o);
  EXPECT_EQ(real.examples, 440);
  EXPECT_GT(real.accuracy[3], 0.8);
  EXPECT_LT(zero.accuracy[3], 0.2);
  EXPECT_LT(shuffled.accuracy[3], 0.2);
  for (double a : real.accuracy) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(ProbeTest, TooFewExamplesThrow) {
  const ProbeDataset d = SyntheticProbeData(9, 1);
  EXPECT_THROW(TrainProbe(d, ProbeOptions{}), std::invalid_argument);
  ProbeOptions o;
  o.folds = 12;
  EXPECT_THROW(TrainProbe(SyntheticProbeData(11, 1), o), std::invalid_argument);
}

TEST(ProbeTest, CsvHasOneColumnPerTarget) {
  const std::vector<std::pair<std::string, ProbeResult>> rows = {{"x", ProbeResult{}}};
  const std::string csv = ProbeCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "dataset,examples,util_a_0,util_a_1,util_a_2,util_b_0,util_b_1,"
            "util_b_2,alloc_a_0,alloc_a_1,alloc_a_2,util_a,util_b,alloc_a");
}

Eigen::MatrixXd Gaussian(int n, int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = normal(gen);
  }
  return m;
}

TEST(PcaTest, WhitenedComponentsHaveUnitVariance) {
  Eigen::MatrixXd x = Gaussian(4000, 5, 1);
  x.col(0) *= 3.0;
  x.col(2) *= 2.0;
  const EmbeddingGeometry g = WhitenedPca(x);
  const Eigen::MatrixXd c = g.coords.rowwise() - g.coords.colwise().mean();
  const Eigen::Matrix2d cov = c.transpose() * c / (c.rows() - 1);
  EXPECT_NEAR(cov(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(cov(1, 1), 1.0, 1e-9);
  EXPECT_NEAR(cov(0, 1), 0.0, 1e-9);
  EXPECT_NEAR(g.eigenvalues(0), 9.0, 0.6);
  EXPECT_NEAR(g.eigenvalues(1), 4.0, 0.3);
}

TEST(PcaTest, IsotropicEmbeddingsKeepUnitScale) {
  const EmbeddingGeometry g = WhitenedPca(Gaussian(20000, 3, 2));
  EXPECT_NEAR(g.eigenvalues(0), 1.0, 0.1);
  EXPECT_NEAR(g.eigenvalues(1), 1.0, 0.1);
}

TEST(PcaTest, SeparatedClustersStaySeparated) {
  Eigen::MatrixXd x = 0.3 * Gaussian(40, 8, 3);
  x.topRows(20).array() += 4.0;
  const EmbeddingGeometry g = WhitenedPca(x);
  const std::vector<int> clusters = KMeans(g.coords, 2);
  std::vector<int> truth(40);
  for (int i = 0; i < 40; ++i) truth[i] = i < 20 ? 0 : 1;
  EXPECT_GT(Silhouette(g.coords, clusters), 0.5);
  EXPECT_DOUBLE_EQ(ClusterPurity(clusters, truth), 1.0);
  EXPECT_EQ(Silhouette(g.coords, std::vector<int>(40, 0)), 0.0);
}

TEST(PcaTest, TooFewRowsThrow) {
  EXPECT_THROW(WhitenedPca(Gaussian(2, 4, 1)), std::invalid_argument);
}

TEST(PcaTest, ReadsTheIdTableFromACheckpoint) {
  diff::ParameterSet<float> params;
  Rng rng(1);
  diff::AddEmbedding(params, "opponent_ids", 10, 4, rng);
  diff::Checkpoint ckpt;
  diff::AppendParameters(ckpt, params, "fixed/");
  const Eigen::MatrixXd m = CheckpointMatrix(ckpt, "fixed/opponent_ids");
  EXPECT_EQ(m.rows(), 10);
  EXPECT_EQ(m.cols(), 4);
  EXPECT_FLOAT_EQ(static_cast<float>(m(3, 2)), params.Find("opponent_ids")->value(3, 2));
  EXPECT_THROW(CheckpointMatrix(ckpt, "fixed/missing"), std::runtime_error);
  const std::vector<std::string> tags(10, "prosocial");
  const std::vector<int> clusters(10, 1);
  const std::string csv = PcaCsv(WhitenedPca(m), tags, clusters);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,pc1,pc2,tag,cluster");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

}  // namespace
}  // namespace negotiate
