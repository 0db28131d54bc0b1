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

#include "negotiate/diff/parameter.h"

#include <cmath>
#include <stdexcept>

namespace negotiate::diff {

template <typename S>
Parameter<S>& ParameterSet<S>::Add(std::string name, int rows, int cols) {
  if (Find(name) != nullptr) {
    throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
  Parameter<S>& p = params_.emplace_back();
  p.name = std::move(name);
  p.value = Matrix<S>::Zero(rows, cols);
  p.grad = Matrix<S>::Zero(rows, cols);
  return p;
}

template <typename S>
Parameter<S>* ParameterSet<S>::Find(std::string_view name) {
  for (Parameter<S>& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename S>
const Parameter<S>* ParameterSet<S>::Find(std::string_view name) const {
  for (const Parameter<S>& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename S>
void ParameterSet<S>::ZeroGrad() {
  for (Parameter<S>& p : params_) p.grad.setZero();
}

template <typename S>
std::int64_t ParameterSet<S>::NumScalars() const {
  std::int64_t n = 0;
  for (const Parameter<S>& p : params_) n += p.value.size();
  return n;
}

template <typename S>
void InitUniform(Parameter<S>& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      p.value(i, j) = static_cast<S>((2.0 * rng.Uniform01() - 1.0) * bound);
    }
  }
}

template <typename S>
LinearParams<S> AddLinear(ParameterSet<S>& set, const std::string& prefix,
                          int in, int out, Rng& rng) {
  LinearParams<S> lin;
  lin.weight = &set.Add(prefix + "/w", out, in);
  lin.bias = &set.Add(prefix + "/b", out, 1);
  lin.in = in;
  lin.out = out;
  InitUniform(*lin.weight, in, rng);
  return lin;
}

template <typename S>
LstmParams<S> AddLstm(ParameterSet<S>& set, const std::string& prefix,
                      int input, int hidden, Rng& rng) {
  LstmParams<S> lstm;
  lstm.w_ih = &set.Add(prefix + "/w_ih", 4 * hidden, input);
  lstm.w_hh = &set.Add(prefix + "/w_hh", 4 * hidden, hidden);
  lstm.bias = &set.Add(prefix + "/b", 4 * hidden, 1);
  lstm.input = input;
  lstm.hidden = hidden;
  InitUniform(*lstm.w_ih, input, rng);
  InitUniform(*lstm.w_hh, hidden, rng);
  return lstm;
}

template <typename S>
Parameter<S>& AddEmbedding(ParameterSet<S>& set, const std::string& name,
                           int rows, int dim, Rng& rng) {
  Parameter<S>& table = set.Add(name, rows, dim);
  InitUniform(table, rows, rng);
  return table;
}

#define NEGOTIATE_INSTANTIATE(S)                                             \
  template class ParameterSet<S>;                                            \
  template void InitUniform<S>(Parameter<S>&, int, Rng&);                    \
  template LinearParams<S> AddLinear<S>(ParameterSet<S>&, const std::string&, \
                                        int, int, Rng&);                     \
  template LstmParams<S> AddLstm<S>(ParameterSet<S>&, const std::string&,    \
                                    int, int, Rng&);                         \
  template Parameter<S>& AddEmbedding<S>(ParameterSet<S>&,                   \
                                         const std::string&, int, int, Rng&);

NEGOTIATE_INSTANTIATE(float)
NEGOTIATE_INSTANTIATE(double)

#undef NEGOTIATE_INSTANTIATE

}  // namespace negotiate::diff
