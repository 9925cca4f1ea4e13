#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dstal {

// Portable sampling helpers. The standard distributions are
// implementation-defined, so runs would not be byte-identical across
// standard libraries; these are.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view text);

// Independent stream seed for (master, a, b), e.g. (seed, round, dialogue).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

using Rng = std::mt19937_64;

// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

// k distinct positions from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

}  // namespace dstal
