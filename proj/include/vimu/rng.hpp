#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vimu {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a string. Stable across platforms and runs.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return mix64(master ^ mix64(stream));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view key) noexcept {
    return derive_seed(master, fnv1a(key));
}

/// A generator for substream `key` of `master`. Results never depend on the
/// order in which substreams are created, so parallel loops stay reproducible.
inline Rng substream(std::uint64_t master, std::string_view key) {
    return Rng{derive_seed(master, key)};
}

inline Rng substream(std::uint64_t master, std::uint64_t stream) {
    return Rng{derive_seed(master, stream)};
}

}  // namespace vimu
