#pragma once

// Seed splitting for reproducible, order-independent random streams.
//
// Every random consumer draws from its own std::mt19937_64 seeded with
// stream_seed(run_seed, stream, index). The mapping is a pure function, so a
// stream's output never depends on which thread consumes it or in what order.

#include <cstdint>
#include <random>

namespace hybridsense::rng {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
    ambient = 1,
    thermal = 2,
    readout = 3,
    population = 4,
    test = 99,
};

constexpr std::uint64_t stream_seed(std::uint64_t run_seed, Stream stream, std::uint64_t index = 0) {
    return mix64(mix64(mix64(run_seed) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

inline std::mt19937_64 make_engine(std::uint64_t run_seed, Stream stream, std::uint64_t index = 0) {
    return std::mt19937_64(stream_seed(run_seed, stream, index));
}

} // namespace hybridsense::rng
