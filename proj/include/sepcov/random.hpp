#pragma once

#include "sepcov/kron.hpp"

#include <cstdint>
#include <random>

namespace sepcov {

using Rng = std::mt19937_64;

// Independent generator for (seed, stream). Chains use stream = chain index
// + 1; stream 0 is reserved for data generation and tempering swaps use
// kSwapStream.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

inline constexpr std::uint64_t kSwapStream = 0xC0FFEEu;

Matrix standard_normal_matrix(Index rows, Index cols, Rng& rng);
Vector standard_normal_vector(Index n, Rng& rng);
double uniform01(Rng& rng);

}  // namespace sepcov
