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

#include "negotiate/diff/checkpoint.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <type_traits>

namespace negotiate::diff {
namespace {

constexpr std::array<char, 8> kMagic = {'N', 'E', 'G', 'C', 'K', 'P', 'T', '\0'};

template <typename U>
void PutLe(std::ostream& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U GetLe(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw std::runtime_error("checkpoint: truncated stream");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return value;
}

std::string GetString(std::istream& in) {
  const std::uint32_t n = GetLe<std::uint32_t>(in);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) {
    throw std::runtime_error("checkpoint: truncated stream");
  }
  return s;
}

void PutString(std::ostream& out, std::string_view s) {
  PutLe(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

const CheckpointEntry* Checkpoint::Find(std::string_view name) const {
  for (const CheckpointEntry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic.data(), kMagic.size());
  PutLe(out, kCheckpointVersion);
  PutString(out, ckpt.metadata);
  PutLe(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const CheckpointEntry& e : ckpt.entries) {
    std::uint64_t count = 1;
    for (std::uint64_t d : e.shape) count *= d;
    if (count != e.data.size()) {
      throw std::invalid_argument("checkpoint: entry '" + e.name +
                                  "' data does not match its shape");
    }
    PutString(out, e.name);
    PutLe(out, static_cast<std::uint8_t>(e.dtype));
    PutLe(out, static_cast<std::uint32_t>(e.shape.size()));
    for (std::uint64_t d : e.shape) PutLe(out, d);
    for (double x : e.data) {
      if (e.dtype == DType::kFloat32) {
        PutLe(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
      } else {
        PutLe(out, std::bit_cast<std::uint64_t>(x));
      }
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint ReadCheckpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const std::uint32_t version = GetLe<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.metadata = GetString(in);
  const std::uint32_t count = GetLe<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = GetString(in);
    const std::uint8_t dtype = GetLe<std::uint8_t>(in);
    if (dtype > 1) throw std::runtime_error("checkpoint: unknown dtype");
    e.dtype = static_cast<DType>(dtype);
    const std::uint32_t ndim = GetLe<std::uint32_t>(in);
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      e.shape.push_back(GetLe<std::uint64_t>(in));
      n *= e.shape.back();
    }
    e.data.resize(n);
    for (std::uint64_t k = 0; k < n; ++k) {
      e.data[k] = e.dtype == DType::kFloat32
                      ? std::bit_cast<float>(GetLe<std::uint32_t>(in))
                      : std::bit_cast<double>(GetLe<std::uint64_t>(in));
    }
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  WriteCheckpoint(out, ckpt);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ReadCheckpoint(in);
}

template <typename S>
void AppendParameters(Checkpoint& ckpt, const ParameterSet<S>& params,
                      std::string_view prefix) {
  for (const Parameter<S>& p : params) {
    CheckpointEntry e;
    e.name = std::string(prefix) + p.name;
    e.dtype = std::is_same_v<S, float> ? DType::kFloat32 : DType::kFloat64;
    e.shape = {static_cast<std::uint64_t>(p.value.rows()),
               static_cast<std::uint64_t>(p.value.cols())};
    e.data.reserve(p.value.size());
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        e.data.push_back(static_cast<double>(p.value(i, j)));
      }
    }
    ckpt.entries.push_back(std::move(e));
  }
}

template <typename S>
void RestoreParameters(const Checkpoint& ckpt, ParameterSet<S>& params,
                       std::string_view prefix) {
  for (Parameter<S>& p : params) {
    const std::string name = std::string(prefix) + p.name;
    const CheckpointEntry* e = ckpt.Find(name);
    if (e == nullptr) {
      throw std::runtime_error("checkpoint: missing parameter '" + name + "'");
    }
    if (e->shape.size() != 2 ||
        e->shape[0] != static_cast<std::uint64_t>(p.value.rows()) ||
        e->shape[1] != static_cast<std::uint64_t>(p.value.cols())) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        p.value(i, j) = static_cast<S>(e->data[k++]);
      }
    }
  }
}

template void AppendParameters(Checkpoint&, const ParameterSet<float>&,
                               std::string_view);
template void AppendParameters(Checkpoint&, const ParameterSet<double>&,
                               std::string_view);
template void RestoreParameters(const Checkpoint&, ParameterSet<float>&,
                                std::string_view);
template void RestoreParameters(const Checkpoint&, ParameterSet<double>&,
                                std::string_view);

}  // namespace negotiate::diff
