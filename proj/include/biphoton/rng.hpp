#ifndef BIPHOTON_RNG_HPP
#define BIPHOTON_RNG_HPP

#include <cstdint>
#include <random>

namespace biphoton {

using Rng = std::mt19937_64;

// Independent random streams. Every random draw in the library comes from a
// generator keyed by (seed, stream, index), so work items can be generated in
// any order or thread and still reproduce bit-for-bit.
enum class Stream : std::uint64_t {
    pairs = 1,
    render = 2,
    phase_screen = 3,
    pair_count = 4,
    test = 99,
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index)
{
    return mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream)) + index);
}

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index);

}  // namespace biphoton

#endif  // BIPHOTON_RNG_HPP
