#pragma once

// Seeded random operators for batteries and property tests.

#include <cstdint>
#include <random>

#include "nclil/algebra.hpp"

namespace nclil {

using Rng = std::mt19937_64;

/// splitmix64 of (seed, index): independent per-instance seeds for batteries
/// and seed sweeps.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Complex Gaussian entries (real and imaginary parts N(0, 1/2)).
Operator random_operator(const AlgebraPtr& algebra, Rng& rng);
/// (g + g*) / 2 for g = random_operator.
Operator random_hermitian(const AlgebraPtr& algebra, Rng& rng);
/// g* g, positive semidefinite.
Operator random_positive(const AlgebraPtr& algebra, Rng& rng);
/// Random block structure: `max_blocks` blocks at most, each of dimension
/// in [1, max_dim], Dirichlet-like positive weights.
AlgebraPtr random_algebra(Rng& rng, int max_blocks, int max_dim);

}  // namespace nclil
