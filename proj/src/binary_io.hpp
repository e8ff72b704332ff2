#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace ncc::detail {

template <class T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

template <class T>
void write_le(std::ostream& out, T value) {
  value = byteswap_if_big(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
bool read_le(std::istream& in, T& value) {
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) return false;
  value = byteswap_if_big(value);
  return true;
}

template <class T>
T load_le(const unsigned char* src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  return byteswap_if_big(value);
}

}  // namespace ncc::detail
