#pragma once

// Tensor products of tracial algebras. Blocks of F_1 (x) ... (x) F_N are
// indexed by multi-indices (i_1, ..., i_N) flattened with i_1 most
// significant; each block is the Kronecker product of the factor blocks.

#include <span>
#include <vector>

#include "nclil/algebra.hpp"

namespace nclil {

Matrix kron(const Matrix& a, const Matrix& b);

/// Product algebra with product weights. Throws std::invalid_argument if the
/// largest block dimension exceeds `dim_cap`.
AlgebraPtr tensor_algebra(std::span<const AlgebraPtr> factors, std::size_t dim_cap = 4096);

/// x_1 (x) ... (x) x_N; the result lives in `product` (which must equal
/// tensor_algebra of the factor algebras).
Operator tensor_product(const AlgebraPtr& product, std::span<const Operator> parts);

/// 1 (x) ... (x) y (x) ... (x) 1 with y in factor `k` (0-based).
Operator embed_factor(const AlgebraPtr& product, std::span<const AlgebraPtr> factors, std::size_t k,
                      const Operator& y);

}  // namespace nclil
