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

// Central finite-difference checks of tape gradients at 64-bit.

#ifndef NEGOTIATE_TESTS_SUPPORT_GRADCHECK_H_
#define NEGOTIATE_TESTS_SUPPORT_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "negotiate/diff/parameter.h"
#include "negotiate/diff/tape.h"

namespace negotiate::testing {

using MatrixD = diff::Matrix<double>;

// Builds the graph on `tape` from the parameters and from leaves created
// (in order) from the checked input tensors, attaches the loss and returns
// its value.
using LossBuilder =
    std::function<double(diff::Tape<double>& tape, std::vector<diff::Var>& leaves)>;

// ||analytic - numeric|| / max(||analytic||, ||numeric||) over every scalar of
// `params` and `inputs`.
double GradientRelativeError(diff::ParameterSet<double>& params,
                             const std::vector<MatrixD*>& inputs,
                             const LossBuilder& build, double step = 1e-6);

// Loss sum(weights .* value(v)), seeded into the tape.
double WeightedSum(diff::Tape<double>& tape, diff::Var v, const MatrixD& weights);

struct GradCheckReport {
  std::string op;
  int instances = 0;
  double max_error = 0.0;
};

// Every differentiable operation plus the full agent, `instances` random
// instances each.
std::vector<GradCheckReport> RunGradientSuite(int instances, std::uint64_t seed);

}  // namespace negotiate::testing

#endif  // NEGOTIATE_TESTS_SUPPORT_GRADCHECK_H_
