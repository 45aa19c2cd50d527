#include "zoq/core.hpp"

#include <span>
#include <string>

namespace zoq {

DirectionBlock sample_direction_block(int dim, int q, SeededRng& rng) {
  if (dim < 1) throw InvalidArgument("sample_direction_block: dim must be >= 1");
  if (q < 1 || q > dim) {
    throw InvalidArgument("sample_direction_block: q=" + std::to_string(q) +
                          " outside [1, " + std::to_string(dim) + "]");
  }
  DirectionBlock block;
  block.seed = rng.seed();
  block.stream_id = rng.stream_id();
  block.U.resize(dim, q);
  // Column-major storage: fills u_1 first, then u_2, ...
  rng.fill_gaussian(std::span<double>(block.U.data(), static_cast<std::size_t>(block.U.size())));
  return block;
}

void require_dim(const Vec& x, int dim, const char* where) {
  if (x.size() != dim) {
    throw InvalidArgument(std::string(where) + ": expected dimension " + std::to_string(dim) +
                          ", got " + std::to_string(x.size()));
  }
}

bool all_finite(const Vec& x) { return x.allFinite(); }

}  // namespace zoq
