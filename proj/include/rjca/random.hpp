#pragma once

#include <cstdint>
#include <random>

#include "rjca/tensor.hpp"

namespace rjca {

using Rng = std::mt19937_64;

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng);
Tensor normal_tensor(Shape shape, double stddev, Rng& rng);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor scaled_uniform(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace rjca
