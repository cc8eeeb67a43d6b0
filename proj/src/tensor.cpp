#include "nclil/tensor.hpp"

#include <stdexcept>
#include <string>

namespace nclil {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

AlgebraPtr tensor_algebra(std::span<const AlgebraPtr> factors, std::size_t dim_cap) {
  if (factors.empty()) throw std::invalid_argument("tensor_algebra: need at least one factor");
  std::vector<Block> blocks{Block{1, 1.0}};
  for (const auto& f : factors) {
    std::vector<Block> next;
    next.reserve(blocks.size() * f->num_blocks());
    for (const auto& a : blocks) {
      for (const auto& b : f->blocks()) {
        const std::size_t d = static_cast<std::size_t>(a.dim) * static_cast<std::size_t>(b.dim);
        if (d > dim_cap)
          throw std::invalid_argument("tensor_algebra: block dimension " + std::to_string(d) + " exceeds cap " +
                                      std::to_string(dim_cap));
        next.push_back({static_cast<int>(d), a.weight * b.weight});
      }
    }
    blocks = std::move(next);
    if (blocks.size() > dim_cap)
      throw std::invalid_argument("tensor_algebra: block count exceeds cap " + std::to_string(dim_cap));
  }
  // Products of weights drift from 1 by rounding; renormalize.
  double total = 0.0;
  for (const auto& b : blocks) total += b.weight;
  for (auto& b : blocks) b.weight /= total;
  return TracialAlgebra::make(std::move(blocks));
}

Operator tensor_product(const AlgebraPtr& product, std::span<const Operator> parts) {
  std::vector<Matrix> blocks{Matrix::Identity(1, 1)};
  for (const auto& part : parts) {
    std::vector<Matrix> next;
    next.reserve(blocks.size() * part.num_blocks());
    for (const auto& a : blocks)
      for (const auto& b : part.blocks()) next.push_back(kron(a, b));
    blocks = std::move(next);
  }
  return Operator(product, std::move(blocks));
}

Operator embed_factor(const AlgebraPtr& product, std::span<const AlgebraPtr> factors, std::size_t k,
                      const Operator& y) {
  if (k >= factors.size()) throw std::invalid_argument("embed_factor: factor index out of range");
  require_same_algebra(factors[k], y.algebra());
  std::vector<Operator> parts;
  parts.reserve(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i)
    parts.push_back(i == k ? y : Operator::identity(factors[i]));
  return tensor_product(product, parts);
}

}  // namespace nclil
