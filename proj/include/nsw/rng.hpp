#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace nsw {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of substream `index` under `master`. Replicate b always sees the same
/// stream no matter which thread runs it or in what order.
[[nodiscard]] constexpr std::uint64_t substream_seed(std::uint64_t master,
                                                     std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

[[nodiscard]] inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
    return Rng(substream_seed(master, index));
}

}  // namespace nsw
