#pragma once

#include <cstdint>
#include <vector>

#include "rjca/gradcheck.hpp"

namespace rjca {

// Finite-difference cases for every layer of the model at tiny dims (all
// extents <= 8): matmul, activations, concat, JCA step, recursive stack
// (T = 3), cross-attention, BLSTM, ASP, projection, AAM loss and one
// end-to-end model loss. Inputs are uniform in [-1, 1].
std::vector<GradCase> standard_gradcheck_cases(std::uint64_t seed = 7);

// Reduces `out` to a scalar with fixed random weights so every entry of
// `out` reaches the gradient.
Var random_projection(Var out, std::uint64_t seed);

}  // namespace rjca
