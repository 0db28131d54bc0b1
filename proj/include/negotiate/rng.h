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

#ifndef NEGOTIATE_RNG_H_
#define NEGOTIATE_RNG_H_

#include <concepts>
#include <cstdint>
#include <random>

namespace negotiate {

// Anything that can hand out bounded integers and unit-interval reals. The
// game sampler is written against this so tests can script the draws.
template <typename R>
concept RandomSource = requires(R& r, int a) {
  { r.UniformInt(a, a) } -> std::same_as<int>;
  { r.Uniform01() } -> std::same_as<double>;
};

// Seeded deterministic stream. The integer and real mappings are done here
// (not through <random> distributions) so draws are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [lo, hi], inclusive.
  int UniformInt(int lo, int hi);

  // Uniform on [0, 1).
  double Uniform01();

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer over (base, stream); used to derive independent
// per-game and per-agent seeds from one run seed.
std::uint64_t MixSeed(std::uint64_t base, std::uint64_t stream);

}  // namespace negotiate

#endif  // NEGOTIATE_RNG_H_
