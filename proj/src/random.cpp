#include "nclil/random.hpp"

#include <cmath>
#include <numeric>

namespace nclil {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Operator random_operator(const AlgebraPtr& algebra, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  std::vector<Matrix> blocks;
  blocks.reserve(algebra->num_blocks());
  for (const auto& b : algebra->blocks()) {
    Matrix m(b.dim, b.dim);
    for (int c = 0; c < b.dim; ++c)
      for (int r = 0; r < b.dim; ++r) m(r, c) = cplx(gauss(rng), gauss(rng));
    blocks.push_back(std::move(m));
  }
  return Operator(algebra, std::move(blocks));
}

Operator random_hermitian(const AlgebraPtr& algebra, Rng& rng) {
  const Operator g = random_operator(algebra, rng);
  return 0.5 * (g + g.adjoint());
}

Operator random_positive(const AlgebraPtr& algebra, Rng& rng) {
  const Operator g = random_operator(algebra, rng);
  return g.adjoint() * g;
}

AlgebraPtr random_algebra(Rng& rng, int max_blocks, int max_dim) {
  std::uniform_int_distribution<int> nblocks(1, max_blocks);
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const int m = nblocks(rng);
  std::vector<Block> blocks(static_cast<std::size_t>(m));
  double total = 0.0;
  for (auto& b : blocks) {
    b.dim = dim(rng);
    b.weight = u(rng);
    total += b.weight;
  }
  for (auto& b : blocks) b.weight /= total;
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i) s += blocks[i].weight;
  blocks.back().weight = 1.0 - s;
  return TracialAlgebra::make(std::move(blocks));
}

}  // namespace nclil
