#pragma once

#include <cstdint>
#include <string_view>

namespace uqe {

// FNV-1a. Used for embedding feature hashing and cache keys; must be stable
// across platforms, so no std::hash.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t fnv1a_mix(std::uint64_t value, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (int i = 0; i < 8; ++i) {
    h ^= value & 0xff;
    h *= kFnvPrime;
    value >>= 8;
  }
  return h;
}

}  // namespace uqe
