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

// Versioned binary checkpoint container.
//
// Layout (all integers little-endian):
//   magic    8 bytes  "NEGCKPT\0"
//   version  u32      (currently 1)
//   meta_len u32, meta bytes (free-form JSON text)
//   count    u32
//   per entry:
//     name_len u32, name bytes
//     dtype    u8     (0 = float32, 1 = float64)
//     ndim     u32, dims u64[ndim]
//     data     prod(dims) little-endian IEEE-754 values, row-major

#ifndef NEGOTIATE_DIFF_CHECKPOINT_H_
#define NEGOTIATE_DIFF_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "negotiate/diff/parameter.h"

namespace negotiate::diff {

enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::kFloat32;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;  // row-major; exact for either dtype
};

struct Checkpoint {
  std::string metadata;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* Find(std::string_view name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt);
// Throws std::runtime_error on a bad magic, unsupported version or
// truncated stream.
Checkpoint ReadCheckpoint(std::istream& in);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Appends every parameter as "<prefix><name>".
template <typename S>
void AppendParameters(Checkpoint& ckpt, const ParameterSet<S>& params,
                      std::string_view prefix);

// Copies "<prefix><name>" entries into matching parameters. Throws
// std::runtime_error if one is missing or has the wrong shape.
template <typename S>
void RestoreParameters(const Checkpoint& ckpt, ParameterSet<S>& params,
                       std::string_view prefix);

}  // namespace negotiate::diff

#endif  // NEGOTIATE_DIFF_CHECKPOINT_H_
