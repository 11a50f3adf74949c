#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "dcabc/error.hpp"

// Little-endian scalar I/O shared by the trajectory cache and network files.
namespace dcabc::binio {

template <class U>
U to_le(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U r = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) r = static_cast<U>((r << 8) | ((v >> (8 * i)) & 0xff));
    return r;
  }
  return v;
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("binary file truncated");
  return to_le(v);
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void put_u8(std::ostream& out, unsigned char c) { out.put(static_cast<char>(c)); }

inline unsigned char get_u8(std::istream& in) {
  char c = 0;
  if (!in.get(c)) throw Error("binary file truncated");
  return static_cast<unsigned char>(c);
}

}  // namespace dcabc::binio
