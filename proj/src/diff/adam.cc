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

#include "negotiate/diff/adam.h"

#include <cmath>
#include <stdexcept>

namespace negotiate::diff {

template <typename S>
AdamState<S> MakeAdamState(const ParameterSet<S>& params,
                           const AdamOptions& options) {
  AdamState<S> state;
  state.options = options;
  for (const Parameter<S>& p : params) {
    state.first_moment.push_back(
        Matrix<S>::Zero(p.value.rows(), p.value.cols()));
    state.second_moment.push_back(
        Matrix<S>::Zero(p.value.rows(), p.value.cols()));
  }
  return state;
}

template <typename S>
void AdamUpdate(const AdamOptions& options, std::int64_t step,
                Matrix<S>& value, const Matrix<S>& grad, Matrix<S>& m,
                Matrix<S>& v) {
  const S b1 = static_cast<S>(options.beta1);
  const S b2 = static_cast<S>(options.beta2);
  m = b1 * m + (S(1) - b1) * grad;
  v = b2 * v + (S(1) - b2) * grad.cwiseProduct(grad);
  const double t = static_cast<double>(step);
  const S m_corr = static_cast<S>(1.0 - std::pow(options.beta1, t));
  const S v_corr = static_cast<S>(1.0 - std::pow(options.beta2, t));
  const S lr = static_cast<S>(options.learning_rate);
  const S eps = static_cast<S>(options.epsilon);
  value.array() -= lr * (m.array() / m_corr) /
                   ((v.array() / v_corr).sqrt() + eps);
}

template <typename S>
void AdamStep(AdamState<S>& state, ParameterSet<S>& params) {
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("AdamStep: state does not match parameters");
  }
  ++state.step;
  std::size_t i = 0;
  for (Parameter<S>& p : params) {
    AdamUpdate(state.options, state.step, p.value, p.grad,
               state.first_moment[i], state.second_moment[i]);
    ++i;
  }
}

template AdamState<float> MakeAdamState(const ParameterSet<float>&,
                                        const AdamOptions&);
template AdamState<double> MakeAdamState(const ParameterSet<double>&,
                                         const AdamOptions&);
template void AdamUpdate(const AdamOptions&, std::int64_t, Matrix<float>&,
                         const Matrix<float>&, Matrix<float>&, Matrix<float>&);
template void AdamUpdate(const AdamOptions&, std::int64_t, Matrix<double>&,
                         const Matrix<double>&, Matrix<double>&,
                         Matrix<double>&);
template void AdamStep(AdamState<float>&, ParameterSet<float>&);
template void AdamStep(AdamState<double>&, ParameterSet<double>&);

}  // namespace negotiate::diff
