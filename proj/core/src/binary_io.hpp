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

// Little-endian helpers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "simnet/error.hpp"

namespace simnet::io {

template <typename U>
U to_le(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out{};
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
    return out;
  }
}

template <typename U>
void put(std::ostream& out, U v) {
  const U le = to_le(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof(U));
}

inline void put_f32(std::ostream& out, float v) { put(out, std::bit_cast<std::uint32_t>(v)); }

template <typename U>
U get(std::istream& in, const std::string& what) {
  U v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(U))) {
    throw IoError("truncated file while reading " + what);
  }
  return to_le(v);
}

inline float get_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(get<std::uint32_t>(in, what));
}

inline std::string get_bytes(std::istream& in, std::size_t n, const std::string& what) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw IoError("truncated file while reading " + what);
  }
  return s;
}

}  // namespace simnet::io
