#pragma once

#include <cmath>
#include <cstdint>

#include "rjca/ops.hpp"
#include "rjca/random.hpp"

namespace rjca::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return uniform_tensor(std::move(shape), lo, hi, rng);
}

// Reduces `out` to a scalar with fixed random weights so every output entry
// contributes to the gradient.
inline Var project_to_scalar(Var out, std::uint64_t seed = 99) {
  Rng rng(seed);
  Tensor weights = uniform_tensor(out.value().shape(), -1.0, 1.0, rng);
  return sum(hadamard(out, out.tape().constant(std::move(weights))));
}

}  // namespace rjca::testing
