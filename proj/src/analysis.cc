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

#include "negotiate/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "negotiate/diff/adam.h"
#include "negotiate/diff/parameter.h"
#include "negotiate/diff/tape.h"
#include "negotiate/rng.h"

namespace negotiate {
namespace {

template <typename T>
void Shuffle(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    std::swap(v[i], v[rng.UniformInt(0, i)]);
  }
}

// Mean ranks, rank 1 = largest value.
std::vector<double> DescendingRanks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

class ProbeModel {
 public:
  ProbeModel(const ProbeOptions& options, std::uint64_t seed) {
    Rng rng(seed);
    symbols_ = &diff::AddEmbedding(params_, "transcript_embed", kVocabSize + 1,
                                   options.embed_dim, rng);
    transcript_lstm_ = diff::AddLstm(params_, "transcript_lstm",
                                     options.embed_dim, options.hidden_dim, rng);
    counts_ = &diff::AddEmbedding(params_, "pool_embed", kMaxItemCount + 1,
                                  options.embed_dim, rng);
    pool_lstm_ = diff::AddLstm(params_, "pool_lstm", options.embed_dim,
                               options.hidden_dim, rng);
    for (int t = 0; t < kProbeTargets; ++t) {
      heads_[t] = diff::AddLinear(params_, "head_" + std::to_string(t),
                                  2 * options.hidden_dim, ProbeClasses(t), rng);
    }
    diff::AdamOptions adam;
    adam.learning_rate = options.learning_rate;
    optimizer_ = diff::MakeAdamState(params_, adam);
  }

  // Examples in `batch` must share a transcript length.
  void TrainStep(const ProbeDataset& data, std::span<const int> batch) {
    diff::Tape<float> tape;
    const diff::Var features = Features(tape, data, batch);
    const int n = static_cast<int>(batch.size());
    std::vector<float> d_logp(n, -1.0f / n);
    std::vector<float> d_ent(n, 0.0f);
    for (int t = 0; t < kProbeTargets; ++t) {
      const diff::Var logits = tape.Linear(heads_[t], features);
      const diff::HeadResult<float> head = tape.Categorical(
          logits, [&](int b, const float*, int) {
            return data.examples[batch[b]].labels[t];
          });
      tape.SetHeadCoefficients(head.id, d_logp, d_ent);
    }
    params_.ZeroGrad();
    tape.Backward();
    diff::AdamStep(optimizer_, params_);
  }

  // Adds exact-match hits per target.
  void Score(const ProbeDataset& data, std::span<const int> batch,
             std::array<long, kProbeTargets>& hits) {
    diff::Tape<float> tape(false);
    const diff::Var features = Features(tape, data, batch);
    for (int t = 0; t < kProbeTargets; ++t) {
      const diff::Var logits = tape.Linear(heads_[t], features);
      const diff::Matrix<float>& z = tape.value(logits);
      for (int b = 0; b < static_cast<int>(batch.size()); ++b) {
        Eigen::Index best = 0;
        z.col(b).maxCoeff(&best);
        if (best == data.examples[batch[b]].labels[t]) ++hits[t];
      }
    }
  }

 private:
  diff::Var Features(diff::Tape<float>& tape, const ProbeDataset& data,
                     std::span<const int> batch) {
    const std::size_t len = data.examples[batch[0]].transcript.size();
    std::vector<int> tokens(batch.size());
    diff::LstmState msg;
    for (std::size_t pos = 0; pos < len; ++pos) {
      for (std::size_t b = 0; b < batch.size(); ++b) {
        tokens[b] = data.examples[batch[b]].transcript[pos];
      }
      msg = tape.Lstm(transcript_lstm_, tape.Embedding(*symbols_, tokens), msg);
    }
    diff::LstmState pool;
    for (int k = 0; k < kNumItems; ++k) {
      for (std::size_t b = 0; b < batch.size(); ++b) {
        tokens[b] = data.examples[batch[b]].pool[k];
      }
      pool = tape.Lstm(pool_lstm_, tape.Embedding(*counts_, tokens), pool);
    }
    if (!msg.h.valid()) {
      msg.h = tape.Input(diff::Matrix<float>::Zero(
          transcript_lstm_.hidden, static_cast<Eigen::Index>(batch.size())));
    }
    return tape.Concat({msg.h, pool.h});
  }

  diff::ParameterSet<float> params_;
  diff::Parameter<float>* symbols_ = nullptr;
  diff::Parameter<float>* counts_ = nullptr;
  diff::LstmParams<float> transcript_lstm_;
  diff::LstmParams<float> pool_lstm_;
  std::array<diff::LinearParams<float>, kProbeTargets> heads_;
  diff::AdamState<float> optimizer_;
};

// Index lists sharing one transcript length, at most `size` long.
std::vector<std::vector<int>> LengthBatches(const ProbeDataset& data,
                                            std::vector<int> indices, int size,
                                            Rng* rng) {
  std::map<std::size_t, std::vector<int>> by_length;
  if (rng != nullptr) Shuffle(indices, *rng);
  for (int i : indices) {
    by_length[data.examples[i].transcript.size()].push_back(i);
  }
  std::vector<std::vector<int>> batches;
  for (auto& [len, group] : by_length) {
    for (std::size_t s = 0; s < group.size(); s += size) {
      const std::size_t e = std::min(group.size(), s + size);
      batches.emplace_back(group.begin() + s, group.begin() + e);
    }
  }
  if (rng != nullptr) Shuffle(batches, *rng);
  return batches;
}

}  // namespace

std::array<long, kVocabSize> SymbolStats::SymbolTotals(
    std::optional<Role> role) const {
  std::array<long, kVocabSize> totals{};
  for (int r = 0; r < 2; ++r) {
    if (role && Index(*role) != r) continue;
    for (const auto& turn : unigram[r]) {
      for (const auto& pos : turn) {
        for (int s = 0; s < kVocabSize; ++s) totals[s] += pos[s];
      }
    }
  }
  return totals;
}

double SymbolStats::TopSymbolShare(std::optional<Role> role) const {
  const std::array<long, kVocabSize> totals = SymbolTotals(role);
  const long sum = std::accumulate(totals.begin(), totals.end(), 0L);
  if (sum == 0) return 0.0;
  return static_cast<double>(*std::max_element(totals.begin(), totals.end())) /
         static_cast<double>(sum);
}

BigramCounts SymbolStats::Bigrams(std::optional<Role> role) const {
  BigramCounts out{};
  for (int r = 0; r < 2; ++r) {
    if (role && Index(*role) != r) continue;
    for (int a = 0; a < kVocabSize; ++a) {
      for (int b = 0; b < kVocabSize; ++b) out[a][b] += bigram[r][a][b];
    }
  }
  return out;
}

SymbolStats ComputeSymbolStats(std::span<const TranscriptRecord> records) {
  SymbolStats stats;
  for (const TranscriptRecord& rec : records) {
    for (std::size_t t = 0; t < rec.turns.size() && t < kMaxTurns; ++t) {
      const TranscriptTurn& turn = rec.turns[t];
      const int r = Index(turn.agent);
      const auto& sym = turn.message.symbols;
      for (int p = 0; p < kUtteranceLength; ++p) {
        ++stats.unigram[r][t][p][sym[p]];
        if (p + 1 < kUtteranceLength) ++stats.bigram[r][sym[p]][sym[p + 1]];
      }
      ++stats.utterances;
    }
  }
  return stats;
}

std::vector<RankedBigram> RankBigrams(const BigramCounts& counts) {
  std::vector<RankedBigram> out;
  for (int a = 0; a < kVocabSize; ++a) {
    for (int b = 0; b < kVocabSize; ++b) {
      if (counts[a][b] > 0) out.push_back({a, b, counts[a][b]});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedBigram& x, const RankedBigram& y) {
                     return x.count > y.count;
                   });
  return out;
}

std::optional<double> BigramRankCorrelation(const BigramCounts& x,
                                            const BigramCounts& y) {
  std::vector<double> cx;
  std::vector<double> cy;
  for (int a = 0; a < kVocabSize; ++a) {
    for (int b = 0; b < kVocabSize; ++b) {
      if (x[a][b] == 0 && y[a][b] == 0) continue;
      cx.push_back(static_cast<double>(x[a][b]));
      cy.push_back(static_cast<double>(y[a][b]));
    }
  }
  if (cx.size() < 2) return std::nullopt;
  const std::vector<double> rx = DescendingRanks(cx);
  const std::vector<double> ry = DescendingRanks(cy);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::vector<std::optional<double>>> BigramRankCorrelationMatrix(
    std::span<const BigramCounts> stats) {
  const std::size_t n = stats.size();
  std::vector<std::vector<std::optional<double>>> m(
      n, std::vector<std::optional<double>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      m[i][j] = m[j][i] = BigramRankCorrelation(stats[i], stats[j]);
    }
  }
  return m;
}

std::string UnigramCsv(const SymbolStats& stats) {
  std::ostringstream out;
  out << "role,turn,position,symbol,count\n";
  for (int r = 0; r < 2; ++r) {
    for (int t = 0; t < kMaxTurns; ++t) {
      for (int p = 0; p < kUtteranceLength; ++p) {
        for (int s = 0; s < kVocabSize; ++s) {
          const long c = stats.unigram[r][t][p][s];
          if (c > 0) {
            out << r << ',' << t + 1 << ',' << p << ',' << s << ',' << c << '\n';
          }
        }
      }
    }
  }
  return out.str();
}

std::string BigramCsv(const SymbolStats& stats) {
  std::ostringstream out;
  out << "role,rank,first,second,count\n";
  for (int r = 0; r < 2; ++r) {
    const std::vector<RankedBigram> ranked = RankBigrams(stats.bigram[r]);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      out << r << ',' << i + 1 << ',' << ranked[i].first << ','
          << ranked[i].second << ',' << ranked[i].count << '\n';
    }
  }
  return out.str();
}

ProbeDataset MakeProbeDataset(std::span<const TranscriptRecord> records) {
  ProbeDataset data;
  for (const TranscriptRecord& rec : records) {
    const std::optional<ItemVector> alloc = rec.AllocationToA();
    if (!alloc) continue;
    ProbeExample ex;
    for (const TranscriptTurn& turn : rec.turns) {
      ex.transcript.insert(ex.transcript.end(), turn.message.symbols.begin(),
                           turn.message.symbols.end());
      ex.transcript.push_back(kProbeSeparator);
    }
    ex.pool = rec.pool.counts;
    for (int k = 0; k < kNumItems; ++k) {
      ex.labels[k] = rec.util_a.values[k];
      ex.labels[kNumItems + k] = rec.util_b.values[k];
      ex.labels[2 * kNumItems + k] = (*alloc)[k];
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

ProbeDataset ZeroInputs(const ProbeDataset& data) {
  ProbeDataset out = data;
  for (ProbeExample& ex : out.examples) {
    std::fill(ex.transcript.begin(), ex.transcript.end(), 0);
    ex.pool = {0, 0, 0};
  }
  return out;
}

ProbeDataset ShuffleLabels(const ProbeDataset& data, std::uint64_t seed) {
  ProbeDataset out = data;
  std::vector<int> perm(data.examples.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  Shuffle(perm, rng);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.examples[i].labels = data.examples[perm[i]].labels;
  }
  return out;
}

int ProbeClasses(int target) {
  if (target < 0 || target >= kProbeTargets) {
    throw std::out_of_range("ProbeClasses: bad target");
  }
  return target < 2 * kNumItems ? kMaxUtility + 1 : kMaxItemCount + 1;
}

ProbeResult TrainProbe(const ProbeDataset& data, const ProbeOptions& options) {
  const int n = static_cast<int>(data.examples.size());
  if (n < kMinProbeExamples || n < options.folds || options.folds < 2) {
    throw std::invalid_argument(
        "probe: need at least " + std::to_string(kMinProbeExamples) +
        " agreed games and one per fold, got " + std::to_string(n));
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(MixSeed(options.seed, 0));
  Shuffle(order, split_rng);

  ProbeResult result;
  result.examples = n;
  for (int fold = 0; fold < options.folds; ++fold) {
    std::vector<int> train;
    std::vector<int> test;
    for (int i = 0; i < n; ++i) {
      (i % options.folds == fold ? test : train).push_back(order[i]);
    }
    ProbeModel model(options, MixSeed(options.seed, 1000 + fold));
    Rng batch_rng(MixSeed(options.seed, 2000 + fold));
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
      for (const std::vector<int>& batch :
           LengthBatches(data, train, options.batch_size, &batch_rng)) {
        model.TrainStep(data, batch);
      }
    }
    std::array<long, kProbeTargets> hits{};
    for (const std::vector<int>& batch :
         LengthBatches(data, test, options.batch_size, nullptr)) {
      model.Score(data, batch, hits);
    }
    for (int t = 0; t < kProbeTargets; ++t) {
      result.accuracy[t] += static_cast<double>(hits[t]) /
                            static_cast<double>(test.size()) / options.folds;
    }
  }
  for (int k = 0; k < kNumItems; ++k) {
    result.utility_a += result.accuracy[k] / kNumItems;
    result.utility_b += result.accuracy[kNumItems + k] / kNumItems;
    result.allocation += result.accuracy[2 * kNumItems + k] / kNumItems;
  }
  return result;
}

std::string ProbeCsv(
    std::span<const std::pair<std::string, ProbeResult>> rows) {
  std::ostringstream out;
  out << "dataset,examples";
  for (const char* group : {"util_a", "util_b", "alloc_a"}) {
    for (int k = 0; k < kNumItems; ++k) out << ',' << group << '_' << k;
  }
  out << ",util_a,util_b,alloc_a\n";
  char buf[32];
  for (const auto& [name, r] : rows) {
    out << name << ',' << r.examples;
    for (double a : r.accuracy) {
      std::snprintf(buf, sizeof(buf), ",%.6f", a);
      out << buf;
    }
    for (double a : {r.utility_a, r.utility_b, r.allocation}) {
      std::snprintf(buf, sizeof(buf), ",%.6f", a);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

EmbeddingGeometry WhitenedPca(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 3) {
    throw std::invalid_argument("pca: need at least 3 embeddings, got " +
                                std::to_string(rows.rows()));
  }
  const Eigen::MatrixXd centred = rows.rowwise() - rows.colwise().mean();
  const Eigen::MatrixXd cov =
      centred.transpose() * centred / static_cast<double>(rows.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("pca: eigendecomposition failed");
  }
  const Eigen::Index d = cov.rows();
  EmbeddingGeometry g;
  g.coords.resize(rows.rows(), 2);
  for (int c = 0; c < 2; ++c) {
    const Eigen::Index idx = d - 1 - c;  // eigenvalues ascend
    const double lambda = idx >= 0 ? solver.eigenvalues()(idx) : 0.0;
    g.eigenvalues(c) = lambda;
    if (idx < 0 || lambda <= 1e-12) {
      g.coords.col(c).setZero();
      continue;
    }
    g.coords.col(c) = centred * solver.eigenvectors().col(idx) / std::sqrt(lambda);
  }
  return g;
}

Eigen::MatrixXd CheckpointMatrix(const diff::Checkpoint& ckpt,
                                 const std::string& name) {
  const diff::CheckpointEntry* e = ckpt.Find(name);
  if (e == nullptr) {
    throw std::runtime_error("checkpoint has no entry '" + name + "'");
  }
  if (e->shape.size() != 2) {
    throw std::runtime_error("checkpoint entry '" + name + "' is not 2-D");
  }
  Eigen::MatrixXd m(e->shape[0], e->shape[1]);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = e->data[k++];
  }
  return m;
}

std::vector<int> KMeans(const Eigen::MatrixXd& points, int k,
                        int max_iterations) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: bad k");
  Eigen::MatrixXd centres(k, points.cols());
  centres.row(0) = points.row(0);
  Eigen::VectorXd nearest =
      (points.rowwise() - centres.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    centres.row(c) = points.row(far);
    nearest = nearest.cwiseMin(
        (points.rowwise() - centres.row(c)).rowwise().squaredNorm());
  }
  std::vector<int> labels(n, -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centres.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[i] != best) {
        labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] == c) {
          sum += points.row(i);
          ++count;
        }
      }
      if (count > 0) centres.row(c) = sum / count;
    }
  }
  return labels;
}

double Silhouette(const Eigen::MatrixXd& points, std::span<const int> labels) {
  const Eigen::Index n = points.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("silhouette: one label per point");
  }
  const int k = n == 0 ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> sizes(k, 0);
  for (int l : labels) ++sizes[l];
  if (std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; }) < 2) {
    return 0.0;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> mean_dist(k, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) mean_dist[labels[j]] += (points.row(i) - points.row(j)).norm();
    }
    const int own = labels[i];
    if (sizes[own] <= 1) continue;  // s(i) = 0
    const double a = mean_dist[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, mean_dist[c] / sizes[c]);
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

double ClusterPurity(std::span<const int> clusters, std::span<const int> truth) {
  if (clusters.size() != truth.size()) {
    throw std::invalid_argument("purity: sizes differ");
  }
  if (clusters.empty()) return 0.0;
  std::map<int, std::map<int, int>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][truth[i]];
  int majority = 0;
  for (const auto& [cluster, counts] : table) {
    int best = 0;
    for (const auto& [label, c] : counts) best = std::max(best, c);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(clusters.size());
}

std::string PcaCsv(const EmbeddingGeometry& geometry,
                   std::span<const std::string> tags,
                   std::span<const int> clusters) {
  std::ostringstream out;
  out << "index,pc1,pc2,tag,cluster\n";
  char buf[64];
  for (Eigen::Index i = 0; i < geometry.coords.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", geometry.coords(i, 0),
                  geometry.coords(i, 1));
    out << i << ',' << buf << ','
        << (static_cast<std::size_t>(i) < tags.size() ? tags[i] : "") << ','
        << (static_cast<std::size_t>(i) < clusters.size() ? clusters[i] : -1)
        << '\n';
  }
  return out.str();
}

}  // namespace negotiate
