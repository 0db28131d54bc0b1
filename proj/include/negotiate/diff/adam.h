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

#ifndef NEGOTIATE_DIFF_ADAM_H_
#define NEGOTIATE_DIFF_ADAM_H_

#include <cstdint>
#include <vector>

#include "negotiate/diff/parameter.h"

namespace negotiate::diff {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename S>
struct AdamState {
  AdamOptions options;
  std::vector<Matrix<S>> first_moment;
  std::vector<Matrix<S>> second_moment;
  std::int64_t step = 0;
};

// Zeroed moments shaped like every parameter in `params`.
template <typename S>
AdamState<S> MakeAdamState(const ParameterSet<S>& params,
                           const AdamOptions& options = {});

// One bias-corrected Adam descent step on a single tensor.
template <typename S>
void AdamUpdate(const AdamOptions& options, std::int64_t step,
                Matrix<S>& value, const Matrix<S>& grad, Matrix<S>& m,
                Matrix<S>& v);

// Increments the step counter and updates every parameter from its grad.
template <typename S>
void AdamStep(AdamState<S>& state, ParameterSet<S>& params);

}  // namespace negotiate::diff

#endif  // NEGOTIATE_DIFF_ADAM_H_
