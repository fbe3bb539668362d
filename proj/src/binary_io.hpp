// Copyright 2026 The razorkit Authors
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

// Little-endian primitives shared by the binary formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "razorkit/error.hpp"

namespace razorkit::binio {

inline void put_uint(std::ostream& out, std::uint64_t v, int bytes) {
  std::array<char, 8> b{};
  for (int i = 0; i < bytes; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), bytes);
}

inline void put_u32(std::ostream& out, std::uint32_t v) { put_uint(out, v, 4); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_uint(out, v, 8); }
inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v), 8); }

inline std::uint64_t get_uint(std::istream& in, int bytes, const char* what) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), bytes);
  if (!in) throw DataError(std::string(what) + ": truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
  return static_cast<std::uint32_t>(get_uint(in, 4, what));
}
inline std::uint64_t get_u64(std::istream& in, const char* what) { return get_uint(in, 8, what); }
inline double get_f64(std::istream& in, const char* what) { return std::bit_cast<double>(get_uint(in, 8, what)); }

}  // namespace razorkit::binio
