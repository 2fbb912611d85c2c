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

#include "simnet/numgrad/checkpoint.hpp"

#include <fstream>
#include <limits>

#include "../binary_io.hpp"

namespace simnet::ng {

namespace {
constexpr char kMagic[] = "SIMNG1";
constexpr std::size_t kMagicLen = 6;
}  // namespace

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, kMagicLen);
  io::put<std::uint8_t>(out, kCheckpointVersion);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    if (rec.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ContractError("checkpoint record name too long: " + rec.name);
    }
    if (shape_numel(rec.shape) != rec.values.size()) {
      throw DimensionError("checkpoint record '" + rec.name + "' has inconsistent shape");
    }
    io::put<std::uint16_t>(out, static_cast<std::uint16_t>(rec.name.size()));
    out.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
    io::put<std::uint8_t>(out, static_cast<std::uint8_t>(rec.shape.size()));
    for (std::size_t d : rec.shape) io::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : rec.values) io::put_f32(out, v);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (io::get_bytes(in, kMagicLen, "magic") != kMagic) {
    throw FormatError(path.string() + " is not a SIMNG1 checkpoint");
  }
  const auto version = io::get<std::uint8_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = io::get<std::uint32_t>(in, "record count");
  std::vector<CheckpointRecord> records;
  records.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    CheckpointRecord rec;
    const auto len = io::get<std::uint16_t>(in, "name length");
    rec.name = io::get_bytes(in, len, "name");
    const auto rank = io::get<std::uint8_t>(in, "rank");
    for (std::uint8_t d = 0; d < rank; ++d) rec.shape.push_back(io::get<std::uint32_t>(in, "dim"));
    const std::size_t n = shape_numel(rec.shape);
    rec.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) rec.values[i] = io::get_f32(in, "values");
    records.push_back(std::move(rec));
  }
  return records;
}

template <typename T>
void save_parameters(const ParameterStore<T>& store, const std::filesystem::path& path) {
  std::vector<CheckpointRecord> records;
  for (const auto& [name, t] : store.entries()) {
    CheckpointRecord rec{name, t.shape(), {}};
    rec.values.assign(t.data().begin(), t.data().end());
    records.push_back(std::move(rec));
  }
  write_checkpoint(path, records);
}

template <typename T>
void load_parameters(ParameterStore<T>& store, const std::filesystem::path& path) {
  auto records = read_checkpoint(path);
  if (records.size() != store.entries().size()) {
    throw ContractError("checkpoint " + path.string() + " has " + std::to_string(records.size()) +
                        " records, model expects " + std::to_string(store.entries().size()));
  }
  for (const auto& rec : records) {
    if (!store.contains(rec.name)) {
      throw ContractError("checkpoint record '" + rec.name + "' is not a model parameter");
    }
    Tensor<T>& t = store.at(rec.name);
    if (t.shape() != rec.shape) {
      throw DimensionError("checkpoint record '" + rec.name + "' has shape " +
                           shape_str(rec.shape) + ", model expects " + shape_str(t.shape()));
    }
    auto dst = t.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(rec.values[i]);
  }
}

template void save_parameters<float>(const ParameterStore<float>&, const std::filesystem::path&);
template void save_parameters<double>(const ParameterStore<double>&,
                                      const std::filesystem::path&);
template void load_parameters<float>(ParameterStore<float>&, const std::filesystem::path&);
template void load_parameters<double>(ParameterStore<double>&, const std::filesystem::path&);

}  // namespace simnet::ng
