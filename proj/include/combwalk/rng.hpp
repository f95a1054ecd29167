#pragma once

#include <cstdint>
#include <random>

namespace combwalk {

using Engine = std::mt19937_64;

// SplitMix64 finalizer, used only to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream for ensemble member `index` of a run seeded by `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

// Uniform on [0,1) with 53 random bits; bit-identical on every platform,
// unlike std::uniform_real_distribution.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace combwalk
