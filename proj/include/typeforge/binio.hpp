/*
 * Copyright 2026 The typeforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TYPEFORGE_BINIO_HPP_
#define TYPEFORGE_BINIO_HPP_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "typeforge/errors.hpp"

namespace typeforge {

// All artifact files are little-endian regardless of host byte order.

inline void write_u16le(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

inline void write_u32le(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void write_u64le(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void write_f32le(std::ostream& out, float v) {
  write_u32le(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_f64le(std::ostream& out, double v) {
  write_u64le(out, std::bit_cast<std::uint64_t>(v));
}

inline void write_string32(std::ostream& out, const std::string& s) {
  write_u32le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, char* buf, std::size_t n,
                       const char* what) {
  in.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw IoError(std::string("truncated file while reading ") + what);
  }
}

inline std::uint16_t read_u16le(std::istream& in, const char* what = "u16") {
  unsigned char b[2];
  read_exact(in, reinterpret_cast<char*>(b), 2, what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t read_u32le(std::istream& in, const char* what = "u32") {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t read_u64le(std::istream& in, const char* what = "u64") {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline float read_f32le(std::istream& in, const char* what = "f32") {
  return std::bit_cast<float>(read_u32le(in, what));
}

inline double read_f64le(std::istream& in, const char* what = "f64") {
  return std::bit_cast<double>(read_u64le(in, what));
}

inline std::string read_string32(std::istream& in,
                                 const char* what = "string") {
  const std::uint32_t len = read_u32le(in, what);
  if (len > (1u << 20)) {
    throw IoError(std::string("implausible string length in ") + what);
  }
  std::string s(len, '\0');
  if (len > 0) read_exact(in, s.data(), len, what);
  return s;
}

}  // namespace typeforge

#endif  // TYPEFORGE_BINIO_HPP_
