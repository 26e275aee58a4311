#pragma once

#include <cstdint>
#include <initializer_list>

namespace coopdgnss {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of the substream addressed by an ordered key, e.g. (master, sweep, trial).
inline std::uint64_t substream_seed(std::initializer_list<std::uint64_t> key) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t k : key) h = mix64(h ^ mix64(k));
    return h;
}

}  // namespace coopdgnss
