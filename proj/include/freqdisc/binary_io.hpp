#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "freqdisc/common.hpp"

namespace freqdisc::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with a little-endian host assumption");

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_f32(std::ostream& os, float v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("truncated binary stream");
  return v;
}

inline float get_f32(std::istream& is) {
  float v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("truncated binary stream");
  return v;
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw Error(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace freqdisc::binary
