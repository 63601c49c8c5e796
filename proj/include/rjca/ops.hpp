#pragma once

#include <cstddef>
#include <span>

#include "rjca/tape.hpp"

namespace rjca {

enum class Activation { tanh, relu, sigmoid, softmax_columns };

// Differentiable operations. Each records one node on the inputs' tape and
// derives its backward pass by hand. Rank-1 operands act as column vectors.

// m x k times k x n. With a rank-1 right operand the result is rank-1.
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double factor);

// a: m x n (or rank-1 m), bias: rank-1 m, added to every column.
Var add_bias(Var a, Var bias);

// Elementwise tanh/relu/sigmoid, or softmax down each column (rank-2 only).
Var activation(Var x, Activation kind);
inline Var tanh(Var x) { return activation(x, Activation::tanh); }
inline Var relu(Var x) { return activation(x, Activation::relu); }
inline Var sigmoid(Var x) { return activation(x, Activation::sigmoid); }
inline Var softmax_columns(Var x) { return activation(x, Activation::softmax_columns); }

Var sqrt(Var x);
// max(x, floor) elementwise; no gradient flows through clamped entries.
Var clamp_min(Var x, double floor);

// p x L over q x L -> (p+q) x L. Rank-1 operands are stacked as vectors.
Var concat_rows(Var a, Var b);
// Each input is m x 1 (or rank-1 m); result is m x n.
Var concat_columns(std::span<const Var> columns);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
// Column j of an m x n matrix as an m x 1 matrix.
Var column(Var a, std::size_t j);
Var reverse_columns(Var a);
Var reshape(Var a, Shape shape);

// Sum of all entries, shape {1}.
Var sum(Var a);

// Unit-normalize a rank-1 vector / every row of a matrix. Zero norm throws
// NumericError.
Var l2_normalize(Var v);
Var l2_normalize_rows(Var m);

// Logits of the additive angular margin head from cosines (rank-1, N):
//   logit_j = s * cos_j                        for j != label
//   logit_y = s * cos(theta_y + margin)        with cos_y clamped to
//             [-1 + 1e-7, 1 - 1e-7]
Var angular_margin_logits(Var cosines, std::size_t label, double s, double margin);

// -log softmax(logits)[label], shape {1}.
Var softmax_cross_entropy(Var logits, std::size_t label);

inline constexpr double kCosineClamp = 1e-7;

}  // namespace rjca
