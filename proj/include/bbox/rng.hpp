#pragma once

#include <cstdint>
#include <random>

namespace bbox {

/// Every stochastic component takes one of these by reference; callers own it.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for stream `id` under a base seed. Distinct ids give independent streams
/// and the mapping does not depend on the order in which streams are created.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t id) noexcept {
    return mix64(mix64(base) ^ (id * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

}  // namespace bbox
