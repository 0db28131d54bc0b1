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

#ifndef NEGOTIATE_DIFF_PARAMETER_H_
#define NEGOTIATE_DIFF_PARAMETER_H_

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "negotiate/rng.h"

namespace negotiate::diff {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// A named trainable tensor (rank <= 2) with its accumulated gradient.
template <typename S>
struct Parameter {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;
};

// Owns parameters with stable addresses; iteration order is insertion order,
// which is also the checkpoint order.
template <typename S>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  // Throws std::invalid_argument on duplicate names.
  Parameter<S>& Add(std::string name, int rows, int cols);
  Parameter<S>* Find(std::string_view name);
  const Parameter<S>* Find(std::string_view name) const;

  void ZeroGrad();
  std::int64_t NumScalars() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  std::deque<Parameter<S>> params_;
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
template <typename S>
void InitUniform(Parameter<S>& p, int fan_in, Rng& rng);

// y = W x + b with W: out x in, b: out x 1.
template <typename S>
struct LinearParams {
  Parameter<S>* weight = nullptr;
  Parameter<S>* bias = nullptr;
  int in = 0;
  int out = 0;
};

template <typename S>
LinearParams<S> AddLinear(ParameterSet<S>& set, const std::string& prefix,
                          int in, int out, Rng& rng);

// LSTM cell; gate rows are ordered input, forget, cell, output.
template <typename S>
struct LstmParams {
  Parameter<S>* w_ih = nullptr;  // 4H x D
  Parameter<S>* w_hh = nullptr;  // 4H x H
  Parameter<S>* bias = nullptr;  // 4H x 1
  int input = 0;
  int hidden = 0;
};

template <typename S>
LstmParams<S> AddLstm(ParameterSet<S>& set, const std::string& prefix,
                      int input, int hidden, Rng& rng);

// Embedding table with one row per token.
template <typename S>
Parameter<S>& AddEmbedding(ParameterSet<S>& set, const std::string& name,
                           int rows, int dim, Rng& rng);

}  // namespace negotiate::diff

#endif  // NEGOTIATE_DIFF_PARAMETER_H_
