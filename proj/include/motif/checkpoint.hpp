// SPDX-License-Identifier: Apache-2.0
#pragma once

// Checkpoint layout (all integers little-endian):
//   "MOTIFDP1"
//   repeated: u32 name length, name bytes, u8 rank, rank x u32 dims,
//             product(dims) x float64 row-major payload

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "motif/errors.hpp"
#include "motif/params.hpp"

namespace motif {

inline constexpr char kCheckpointMagic[] = "MOTIFDP1";

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw ParseError("checkpoint truncated", 0);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const ParamStore& params) {
  os.write(kCheckpointMagic, 8);
  for (const auto& e : params.entries()) {
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(e.tensor.rank()));
    for (auto d : e.tensor.dims) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (double v : e.tensor.data) detail::put_le<double>(os, v);
  }
}

inline ParamStore read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw ParseError("not a MOTIFDP1 checkpoint", 0);
  ParamStore params;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto name_len = detail::get_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw ParseError("checkpoint truncated in name", 0);
    const auto rank = detail::get_le<std::uint8_t>(is);
    std::vector<std::size_t> dims;
    for (unsigned r = 0; r < rank; ++r) dims.push_back(detail::get_le<std::uint32_t>(is));
    Tensor t;
    if (rank == 0) {
      t.data.assign(1, 0.0);
    } else {
      t = Tensor(dims);
    }
    for (auto& v : t.data) v = detail::get_le<double>(is);
    params.add(name, std::move(t));
  }
  return params;
}

inline void save_checkpoint(const std::string& path, const ParamStore& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  write_checkpoint(os, params);
}

inline ParamStore load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
  return read_checkpoint(is);
}

}  // namespace motif
