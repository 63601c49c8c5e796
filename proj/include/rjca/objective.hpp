#pragma once

#include <cstddef>

#include "rjca/ops.hpp"
#include "rjca/random.hpp"

namespace rjca {

inline constexpr double kDefaultAamScale = 30.0;
inline constexpr double kDefaultAamMargin = 0.2;

// Additive angular margin softmax head over N speaker classes.
struct AamHead {
  Tensor class_weights;  // N x e, rows used unit-normalized
  double scale = kDefaultAamScale;
  double margin = kDefaultAamMargin;  // radians

  static AamHead random(std::size_t classes, std::size_t embed_dim, Rng& rng, double scale = kDefaultAamScale,
                        double margin = kDefaultAamMargin);
  // Throws ConfigError unless scale > 0 and 0 <= margin < pi/2.
  void validate() const;
  std::size_t classes() const { return class_weights.rows(); }
};

// Cross-entropy of softmax over s*cos(theta_j), with the target angle widened
// by the margin: s*cos(theta_y + m). Embedding and class rows are
// unit-normalized first; a zero vector throws NumericError.
Var aam_loss(Var embedding, Var class_weights, std::size_t label, double scale, double margin);

struct AamLossResult {
  double loss = 0.0;
  Tensor embedding_grad;
  Tensor weight_grad;
};

AamLossResult aam_loss(const Tensor& embedding, std::size_t label, const AamHead& head);

// Dot product of the unit-normalized vectors, in [-1, 1].
double cosine_score(const Tensor& enroll, const Tensor& test);

}  // namespace rjca
