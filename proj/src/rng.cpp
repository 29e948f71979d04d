#include "biphoton/rng.hpp"

namespace biphoton {

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index)
{
    std::seed_seq seq{derive_seed(seed, stream, index), static_cast<std::uint64_t>(stream), index};
    return Rng(seq);
}

}  // namespace biphoton
