#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace lung::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and require a little-endian host");

template <typename T>
  requires std::is_trivially_copyable_v<T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

/// Reads a trivially copyable value; returns false on a short read.
template <typename T>
  requires std::is_trivially_copyable_v<T>
bool get(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<std::size_t>(in.gcount()) == sizeof(T);
}

inline bool get_bytes(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

}  // namespace lung::binary
