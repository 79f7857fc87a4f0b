#pragma once

#include <cstdint>
#include <random>

namespace mmmf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds from a root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for the named sub-stream `stream` of a run seeded with `root`.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Stream identifiers for the random sources of one training run.
enum class Stream : std::uint64_t {
    init = 1,
    shuffle = 2,
    mask = 3,
    dropout = 4,
    validation_mask = 5,
    inference_mask = 6,
};

inline Rng make_rng(std::uint64_t root, Stream stream) {
    return Rng(derive_seed(root, static_cast<std::uint64_t>(stream)));
}

}  // namespace mmmf
