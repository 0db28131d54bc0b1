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

// Reverse-mode differentiation over a recorded tape of batched operations.
//
// Every value is a matrix whose columns are independent batch entries. Each
// operation computes its output eagerly and, when recording, pushes a
// backward closure. Backward() replays the closures in reverse creation
// order, accumulating into Parameter::grad.
//
// Policy heads are the only loss leaves: after sampling, the caller attaches
// per-column coefficients dL/dlog_prob and dL/dentropy with
// SetHeadCoefficients(), then calls Backward().

#ifndef NEGOTIATE_DIFF_TAPE_H_
#define NEGOTIATE_DIFF_TAPE_H_

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "negotiate/diff/parameter.h"

namespace negotiate::diff {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

struct LstmState {
  Var h;  // invalid = zeros
  Var c;  // invalid = zeros
};

struct HeadId {
  int index = -1;
};

template <typename S>
struct HeadResult {
  HeadId id;
  std::vector<int> choices;
  std::vector<S> log_prob;  // of the chosen index, per column
  std::vector<S> entropy;   // per column
  Matrix<S> probs;          // K x B; for Bernoulli heads 1 x B holding p
};

// Picks a class for one column given its probability vector.
template <typename S>
using CategoricalChooser = std::function<int(int column, const S* probs, int k)>;
// Picks the binary outcome for one column given p = sigmoid(logit).
template <typename S>
using BernoulliChooser = std::function<bool(int column, S p)>;

template <typename S>
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  // A constant; receives no gradient.
  Var Input(Matrix<S> value);
  // A differentiable leaf; its gradient is readable after Backward().
  Var Leaf(Matrix<S> value);

  const Matrix<S>& value(Var v) const { return values_[v.id]; }
  // Empty if no gradient reached v.
  const Matrix<S>& grad(Var v) const { return grads_[v.id]; }
  int cols(Var v) const { return static_cast<int>(values_[v.id].cols()); }

  // y = W x + b.
  Var Linear(const LinearParams<S>& lin, Var x);
  // Column b of the result is row indices[b] of the table.
  Var Embedding(Parameter<S>& table, std::span<const int> indices);
  // Row-wise stack of equally wide inputs.
  Var Concat(std::initializer_list<Var> parts);
  Var Relu(Var x);
  // Column b of the result is column columns[b] of x; repeats allowed.
  Var Gather(Var x, std::span<const int> columns);
  LstmState Lstm(const LstmParams<S>& lstm, Var x, LstmState prev);

  // Softmax over rows of logits (K x B). `allowed`, if non-empty, masks out
  // classes entirely (probability exactly 0).
  HeadResult<S> Categorical(Var logits, const CategoricalChooser<S>& choose,
                            std::span<const bool> allowed = {});
  // Sigmoid over a 1 x B logit row; choice 1 means "true".
  HeadResult<S> Bernoulli(Var logit, const BernoulliChooser<S>& choose);

  // dL/dlog_prob and dL/dentropy per column of the head.
  void SetHeadCoefficients(HeadId head, std::span<const S> d_log_prob,
                           std::span<const S> d_entropy);
  // Adds an upstream gradient dL/dv directly (for custom scalar losses).
  void SeedGrad(Var v, const Matrix<S>& upstream);

  void Backward();

 private:
  struct HeadRecord {
    Var logits;
    bool bernoulli = false;
    Matrix<S> probs;
    std::vector<char> allowed;
    std::vector<int> choices;
    std::vector<S> entropy;
    std::vector<S> d_log_prob;
    std::vector<S> d_entropy;
  };

  Var Push(Matrix<S> value, bool requires_grad);
  bool needs(Var v) const { return v.valid() && requires_grad_[v.id]; }
  template <typename Expr>
  void Accumulate(Var v, const Expr& g);
  void HeadBackward(const HeadRecord& head);

  bool record_;
  std::vector<Matrix<S>> values_;
  std::vector<Matrix<S>> grads_;
  std::vector<char> requires_grad_;
  std::vector<std::function<void()>> ops_;
  std::vector<HeadRecord> heads_;
};

}  // namespace negotiate::diff

#endif  // NEGOTIATE_DIFF_TAPE_H_
