#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace ctdb {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Order-sensitive combination of integer keys into one stream seed.
constexpr std::uint64_t combine_seed(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto k : keys) h = mix64(h ^ mix64(k));
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) noexcept {
  return combine_seed({base, fnv1a(tag)});
}

}  // namespace ctdb
