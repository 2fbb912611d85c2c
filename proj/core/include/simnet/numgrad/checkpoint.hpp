// Copyright 2026 The simnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "simnet/numgrad/params.hpp"

namespace simnet::ng {

// Checkpoint file layout (all integers little-endian):
//   "SIMNG1"  u8 version(=1)  u32 record_count
//   per record: u16 name_len, name bytes, u8 rank, rank x u32 dims,
//               numel x f32 values (row-major)

struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path);

/// Parameters and buffers, in store order.
template <typename T>
void save_parameters(const ParameterStore<T>& store, const std::filesystem::path& path);

/// Every store entry must be present with the same shape; extra records are
/// an error too.
template <typename T>
void load_parameters(ParameterStore<T>& store, const std::filesystem::path& path);

}  // namespace simnet::ng
