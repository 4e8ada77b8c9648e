#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace bkan {

// Shortest decimal string that parses back to exactly the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// FNV-1a 64-bit, used for dataset checksums in run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace bkan
