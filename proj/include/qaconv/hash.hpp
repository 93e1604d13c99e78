#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "json.hpp"

namespace qaconv {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the canonical (key-sorted, compact) JSON dump.
inline std::string content_hash(const nlohmann::json& j) { return hex64(fnv1a64(j.dump())); }

template <class T>
std::string content_hash_of(const T& value) {
  nlohmann::json j = value;
  return content_hash(j);
}

}  // namespace qaconv
