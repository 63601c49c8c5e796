#pragma once

#include <cstddef>
#include <string>

#include "rjca/ops.hpp"
#include "rjca/params.hpp"
#include "rjca/random.hpp"

namespace rjca {

// Floor applied to the pooled variance before the square root.
inline constexpr double kVarianceFloor = 1e-8;

// One LSTM direction. Gate blocks are stacked in the order i, f, g, o, each
// `hidden` rows tall.
struct LstmDirectionParams {
  Tensor input_weights;      // 4h x d
  Tensor recurrent_weights;  // 4h x h
  Tensor bias;               // 4h
};

struct BlstmParams {
  LstmDirectionParams forward;
  LstmDirectionParams backward;

  std::size_t hidden() const { return forward.recurrent_weights.cols(); }
  std::size_t input_dim() const { return forward.input_weights.cols(); }

  static BlstmParams zeros(std::size_t input_dim, std::size_t hidden);
  // Scaled-uniform weights, forget-gate bias 1, other biases 0.
  static BlstmParams random(std::size_t input_dim, std::size_t hidden, Rng& rng);

  void check_shapes(std::size_t input_dim) const;
  void store(ParamStore& store, const std::string& prefix) const;
  static BlstmParams load(const ParamStore& store, const std::string& prefix);
};

struct LstmDirectionWeights {
  Var input_weights, recurrent_weights, bias;
};

struct BlstmWeights {
  LstmDirectionWeights forward, backward;

  static BlstmWeights bind(Tape& tape, const BlstmParams& p, bool trainable);
  static BlstmWeights from(const BoundParams& bound, const std::string& prefix);
};

// Attentive statistics pooling parameters for c-dimensional frames.
struct AspParams {
  Tensor weight;  // a x c
  Tensor bias;    // a
  Tensor score;   // a  (v)

  static AspParams zeros(std::size_t input_dim, std::size_t bottleneck);
  static AspParams random(std::size_t input_dim, std::size_t bottleneck, Rng& rng);
  void store(ParamStore& store, const std::string& prefix) const;
  static AspParams load(const ParamStore& store, const std::string& prefix);
};

struct AspWeights {
  Var weight, bias, score;

  static AspWeights bind(Tape& tape, const AspParams& p, bool trainable);
  static AspWeights from(const BoundParams& bound, const std::string& prefix);
};

struct EmbeddingProjection {
  Tensor weight;  // e x in
  Tensor bias;    // e (empty when the projection has no bias)

  static EmbeddingProjection random(std::size_t input_dim, std::size_t embed_dim, Rng& rng, bool with_bias = true);
  void store(ParamStore& store, const std::string& prefix) const;
  static EmbeddingProjection load(const ParamStore& store, const std::string& prefix);
};

struct ProjectionWeights {
  Var weight;
  Var bias;  // invalid Var when there is no bias

  static ProjectionWeights bind(Tape& tape, const EmbeddingProjection& p, bool trainable);
  static ProjectionWeights from(const BoundParams& bound, const std::string& prefix);
};

// Bidirectional single-layer LSTM over the columns of x (d x L), zero initial
// states. Output 2h x L: forward hidden states on top, backward below, both
// aligned to input time.
Var blstm_forward(Var x, const BlstmWeights& w);
Tensor blstm_forward(const Tensor& x, const BlstmParams& params);

struct AspOutput {
  Var pooled;   // rank-1, 2c: [mean ; std]
  Var weights;  // L x 1 attention weights over frames
};

// e_t = v^T tanh(W h_t + b), alpha = softmax_t(e), mu = sum alpha_t h_t,
// sigma = sqrt(max(sum alpha_t h_t^2 - mu^2, floor)).
AspOutput asp(Var frames, const AspWeights& w, double variance_floor = kVarianceFloor);
Tensor asp(const Tensor& frames, const AspParams& params, double variance_floor = kVarianceFloor);

// W x (+ b) on a rank-1 pooled vector.
Var project_embedding(Var pooled, const ProjectionWeights& w);
Tensor project_embedding(const Tensor& pooled, const EmbeddingProjection& params);

}  // namespace rjca
