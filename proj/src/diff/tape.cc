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

#include "negotiate/diff/tape.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace negotiate::diff {
namespace {

template <typename S>
S Softplus(S x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Derived>
auto Sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

void Require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

template <typename S>
Var Tape<S>::Push(Matrix<S> value, bool requires_grad) {
  const Var v{static_cast<int>(values_.size())};
  values_.push_back(std::move(value));
  grads_.emplace_back();
  requires_grad_.push_back(requires_grad && record_);
  return v;
}

template <typename S>
template <typename Expr>
void Tape<S>::Accumulate(Var v, const Expr& g) {
  if (!needs(v)) return;
  Matrix<S>& dst = grads_[v.id];
  if (dst.size() == 0) {
    dst = g;
  } else {
    dst += g;
  }
}

template <typename S>
Var Tape<S>::Input(Matrix<S> value) {
  return Push(std::move(value), false);
}

template <typename S>
Var Tape<S>::Leaf(Matrix<S> value) {
  return Push(std::move(value), true);
}

template <typename S>
Var Tape<S>::Linear(const LinearParams<S>& lin, Var x) {
  const Matrix<S>& xv = values_[x.id];
  Require(xv.rows() == lin.in, "Tape::Linear: input width mismatch");
  Matrix<S> y = lin.weight->value * xv;
  y.colwise() += lin.bias->value.col(0);
  const Var out = Push(std::move(y), true);
  if (record_) {
    ops_.push_back([this, lin, x, out] {
      const Matrix<S>& gy = grads_[out.id];
      if (gy.size() == 0) return;
      lin.weight->grad.noalias() += gy * values_[x.id].transpose();
      lin.bias->grad.col(0) += gy.rowwise().sum();
      if (needs(x)) Accumulate(x, lin.weight->value.transpose() * gy);
    });
  }
  return out;
}

template <typename S>
Var Tape<S>::Embedding(Parameter<S>& table, std::span<const int> indices) {
  const int rows = static_cast<int>(table.value.rows());
  Matrix<S> y(table.value.cols(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] < 0 || indices[b] >= rows) {
      throw std::out_of_range("Tape::Embedding: index " +
                              std::to_string(indices[b]) + " outside table '" +
                              table.name + "'");
    }
    y.col(b) = table.value.row(indices[b]).transpose();
  }
  const Var out = Push(std::move(y), true);
  if (record_) {
    std::vector<int> idx(indices.begin(), indices.end());
    Parameter<S>* t = &table;
    ops_.push_back([this, t, idx = std::move(idx), out] {
      const Matrix<S>& gy = grads_[out.id];
      if (gy.size() == 0) return;
      for (std::size_t b = 0; b < idx.size(); ++b) {
        t->grad.row(idx[b]) += gy.col(b).transpose();
      }
    });
  }
  return out;
}

template <typename S>
Var Tape<S>::Concat(std::initializer_list<Var> parts) {
  Require(parts.size() > 0, "Tape::Concat: no inputs");
  const Eigen::Index cols = values_[parts.begin()->id].cols();
  Eigen::Index rows = 0;
  bool req = false;
  for (Var p : parts) {
    Require(values_[p.id].cols() == cols, "Tape::Concat: width mismatch");
    rows += values_[p.id].rows();
    req = req || requires_grad_[p.id];
  }
  Matrix<S> y(rows, cols);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    const Eigen::Index r = values_[p.id].rows();
    y.middleRows(offset, r) = values_[p.id];
    offset += r;
  }
  const Var out = Push(std::move(y), req);
  if (record_ && req) {
    std::vector<Var> in(parts.begin(), parts.end());
    ops_.push_back([this, in = std::move(in), out] {
      const Matrix<S>& gy = grads_[out.id];
      if (gy.size() == 0) return;
      Eigen::Index off = 0;
      for (Var p : in) {
        const Eigen::Index r = values_[p.id].rows();
        if (needs(p)) Accumulate(p, gy.middleRows(off, r));
        off += r;
      }
    });
  }
  return out;
}

template <typename S>
Var Tape<S>::Relu(Var x) {
  const Var out = Push(values_[x.id].cwiseMax(S(0)), requires_grad_[x.id]);
  if (record_ && needs(x)) {
    ops_.push_back([this, x, out] {
      const Matrix<S>& gy = grads_[out.id];
      if (gy.size() == 0) return;
      Accumulate(x, (values_[x.id].array() > S(0))
                        .select(gy.array(), S(0))
                        .matrix());
    });
  }
  return out;
}

template <typename S>
Var Tape<S>::Gather(Var x, std::span<const int> columns) {
  const Matrix<S>& xv = values_[x.id];
  Matrix<S> y(xv.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t b = 0; b < columns.size(); ++b) {
    if (columns[b] < 0 || columns[b] >= xv.cols()) {
      throw std::out_of_range("Tape::Gather: column out of range");
    }
    y.col(b) = xv.col(columns[b]);
  }
  const Var out = Push(std::move(y), requires_grad_[x.id]);
  if (record_ && needs(x)) {
    std::vector<int> idx(columns.begin(), columns.end());
    ops_.push_back([this, x, idx = std::move(idx), out] {
      const Matrix<S>& gy = grads_[out.id];
      if (gy.size() == 0) return;
      Matrix<S> gx = Matrix<S>::Zero(values_[x.id].rows(), values_[x.id].cols());
      for (std::size_t b = 0; b < idx.size(); ++b) gx.col(idx[b]) += gy.col(b);
      Accumulate(x, gx);
    });
  }
  return out;
}

template <typename S>
LstmState Tape<S>::Lstm(const LstmParams<S>& lstm, Var x, LstmState prev) {
  const int H = lstm.hidden;
  const Matrix<S>& xv = values_[x.id];
  Require(xv.rows() == lstm.input, "Tape::Lstm: input width mismatch");
  const Eigen::Index B = xv.cols();

  Matrix<S> gates = lstm.w_ih->value * xv;
  if (prev.h.valid()) {
    Require(values_[prev.h.id].cols() == B, "Tape::Lstm: batch mismatch");
    gates.noalias() += lstm.w_hh->value * values_[prev.h.id];
  }
  gates.colwise() += lstm.bias->value.col(0);

  // Activated gates, same layout as the pre-activations.
  Matrix<S> act(4 * H, B);
  act.topRows(H) = Sigmoid(gates.topRows(H).array()).matrix();
  act.middleRows(H, H) = Sigmoid(gates.middleRows(H, H).array()).matrix();
  act.middleRows(2 * H, H) = gates.middleRows(2 * H, H).array().tanh().matrix();
  act.bottomRows(H) = Sigmoid(gates.bottomRows(H).array()).matrix();

  Matrix<S> c = act.topRows(H).cwiseProduct(act.middleRows(2 * H, H));
  if (prev.c.valid()) {
    c += act.middleRows(H, H).cwiseProduct(values_[prev.c.id]);
  }
  Matrix<S> tanh_c = c.array().tanh().matrix();
  Matrix<S> h = act.bottomRows(H).cwiseProduct(tanh_c);

  LstmState next;
  next.h = Push(std::move(h), true);
  next.c = Push(std::move(c), true);
  if (!record_) return next;

  ops_.push_back([this, lstm, x, prev, next, act = std::move(act),
                  tanh_c = std::move(tanh_c)] {
    const Matrix<S>& dh = grads_[next.h.id];
    const Matrix<S>& dc_out = grads_[next.c.id];
    if (dh.size() == 0 && dc_out.size() == 0) return;
    const int H = lstm.hidden;
    const Eigen::Index B = act.cols();
    auto i = act.topRows(H).array();
    auto f = act.middleRows(H, H).array();
    auto g = act.middleRows(2 * H, H).array();
    auto o = act.bottomRows(H).array();

    Matrix<S> dc = Matrix<S>::Zero(H, B);
    Matrix<S> dgates(4 * H, B);
    if (dh.size() != 0) {
      dc.array() += dh.array() * o * (S(1) - tanh_c.array().square());
      dgates.bottomRows(H) =
          (dh.array() * tanh_c.array() * o * (S(1) - o)).matrix();
    } else {
      dgates.bottomRows(H).setZero();
    }
    if (dc_out.size() != 0) dc += dc_out;

    dgates.topRows(H) = (dc.array() * g * i * (S(1) - i)).matrix();
    if (prev.c.valid()) {
      dgates.middleRows(H, H) =
          (dc.array() * values_[prev.c.id].array() * f * (S(1) - f)).matrix();
      if (needs(prev.c)) Accumulate(prev.c, (dc.array() * f).matrix());
    } else {
      dgates.middleRows(H, H).setZero();
    }
    dgates.middleRows(2 * H, H) = (dc.array() * i * (S(1) - g.square())).matrix();

    lstm.w_ih->grad.noalias() += dgates * values_[x.id].transpose();
    lstm.bias->grad.col(0) += dgates.rowwise().sum();
    if (prev.h.valid()) {
      lstm.w_hh->grad.noalias() += dgates * values_[prev.h.id].transpose();
      if (needs(prev.h)) {
        Accumulate(prev.h, lstm.w_hh->value.transpose() * dgates);
      }
    }
    if (needs(x)) Accumulate(x, lstm.w_ih->value.transpose() * dgates);
  });
  return next;
}

template <typename S>
HeadResult<S> Tape<S>::Categorical(Var logits,
                                   const CategoricalChooser<S>& choose,
                                   std::span<const bool> allowed) {
  const Matrix<S>& z = values_[logits.id];
  const int K = static_cast<int>(z.rows());
  const int B = static_cast<int>(z.cols());
  Require(allowed.empty() || static_cast<int>(allowed.size()) == K,
          "Tape::Categorical: mask size mismatch");
  auto is_allowed = [&](int k) { return allowed.empty() || allowed[k]; };

  HeadResult<S> result;
  result.probs = Matrix<S>::Zero(K, B);
  Matrix<S> log_probs = Matrix<S>::Zero(K, B);
  result.choices.resize(B);
  result.log_prob.resize(B);
  result.entropy.resize(B);
  for (int b = 0; b < B; ++b) {
    S max = -std::numeric_limits<S>::infinity();
    for (int k = 0; k < K; ++k) {
      if (is_allowed(k)) max = std::max(max, z(k, b));
    }
    S sum = 0;
    for (int k = 0; k < K; ++k) {
      if (is_allowed(k)) sum += std::exp(z(k, b) - max);
    }
    const S lse = max + std::log(sum);
    S entropy = 0;
    for (int k = 0; k < K; ++k) {
      if (!is_allowed(k)) continue;
      log_probs(k, b) = z(k, b) - lse;
      result.probs(k, b) = std::exp(log_probs(k, b));
      entropy -= result.probs(k, b) * log_probs(k, b);
    }
    const int c = choose(b, result.probs.col(b).data(), K);
    if (c < 0 || c >= K || !is_allowed(c)) {
      throw std::out_of_range("Tape::Categorical: chooser returned " +
                              std::to_string(c));
    }
    result.choices[b] = c;
    result.log_prob[b] = log_probs(c, b);
    result.entropy[b] = entropy;
  }

  if (record_) {
    HeadRecord rec;
    rec.logits = logits;
    rec.probs = log_probs;  // backward only needs log p; p = exp(log p)
    rec.allowed.assign(allowed.begin(), allowed.end());
    rec.choices = result.choices;
    rec.entropy = result.entropy;
    result.id.index = static_cast<int>(heads_.size());
    heads_.push_back(std::move(rec));
    const int idx = result.id.index;
    ops_.push_back([this, idx] { HeadBackward(heads_[idx]); });
  }
  return result;
}

template <typename S>
HeadResult<S> Tape<S>::Bernoulli(Var logit, const BernoulliChooser<S>& choose) {
  const Matrix<S>& z = values_[logit.id];
  Require(z.rows() == 1, "Tape::Bernoulli: logit must be 1 x B");
  const int B = static_cast<int>(z.cols());
  HeadResult<S> result;
  result.probs.resize(1, B);
  result.choices.resize(B);
  result.log_prob.resize(B);
  result.entropy.resize(B);
  for (int b = 0; b < B; ++b) {
    const S x = z(0, b);
    const S p = S(1) / (S(1) + std::exp(-x));
    const S sp_pos = Softplus(x);   // -log(1 - p)
    const S sp_neg = Softplus(-x);  // -log p
    const bool e = choose(b, p);
    result.probs(0, b) = p;
    result.choices[b] = e ? 1 : 0;
    result.log_prob[b] = e ? -sp_neg : -sp_pos;
    result.entropy[b] = p * sp_neg + (S(1) - p) * sp_pos;
  }
  if (record_) {
    HeadRecord rec;
    rec.logits = logit;
    rec.bernoulli = true;
    rec.probs = result.probs;
    rec.choices = result.choices;
    rec.entropy = result.entropy;
    result.id.index = static_cast<int>(heads_.size());
    heads_.push_back(std::move(rec));
    const int idx = result.id.index;
    ops_.push_back([this, idx] { HeadBackward(heads_[idx]); });
  }
  return result;
}

template <typename S>
void Tape<S>::SetHeadCoefficients(HeadId head, std::span<const S> d_log_prob,
                                  std::span<const S> d_entropy) {
  if (head.index < 0 || head.index >= static_cast<int>(heads_.size())) {
    throw std::out_of_range("Tape::SetHeadCoefficients: unknown head");
  }
  HeadRecord& rec = heads_[head.index];
  const std::size_t B = rec.choices.size();
  Require(d_log_prob.size() == B && d_entropy.size() == B,
          "Tape::SetHeadCoefficients: size mismatch");
  rec.d_log_prob.assign(d_log_prob.begin(), d_log_prob.end());
  rec.d_entropy.assign(d_entropy.begin(), d_entropy.end());
}

template <typename S>
void Tape<S>::SeedGrad(Var v, const Matrix<S>& upstream) {
  Require(upstream.rows() == values_[v.id].rows() &&
              upstream.cols() == values_[v.id].cols(),
          "Tape::SeedGrad: shape mismatch");
  Accumulate(v, upstream);
}

template <typename S>
void Tape<S>::HeadBackward(const HeadRecord& head) {
  if (head.d_log_prob.empty() || !needs(head.logits)) return;
  const Matrix<S>& z = values_[head.logits.id];
  const Eigen::Index K = z.rows();
  const Eigen::Index B = z.cols();
  Matrix<S> dz = Matrix<S>::Zero(K, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const S a = head.d_log_prob[b];
    const S e = head.d_entropy[b];
    if (a == S(0) && e == S(0)) continue;
    if (head.bernoulli) {
      const S p = head.probs(0, b);
      const S chosen = head.choices[b] ? S(1) : S(0);
      // dlog p(e)/dz = e - p; dH/dz = -z p (1 - p).
      dz(0, b) = a * (chosen - p) - e * z(0, b) * p * (S(1) - p);
    } else {
      const S H = head.entropy[b];
      for (Eigen::Index k = 0; k < K; ++k) {
        if (!head.allowed.empty() && !head.allowed[k]) continue;
        const S logp = head.probs(k, b);
        const S p = std::exp(logp);
        dz(k, b) = a * ((k == head.choices[b] ? S(1) : S(0)) - p) -
                   e * p * (logp + H);
      }
    }
  }
  Accumulate(head.logits, dz);
}

template <typename S>
void Tape<S>::Backward() {
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

template class Tape<float>;
template class Tape<double>;

}  // namespace negotiate::diff
