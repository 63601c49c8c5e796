#include "rjca/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rjca {

AamHead AamHead::random(std::size_t classes, std::size_t embed_dim, Rng& rng, double scale, double margin) {
  AamHead head;
  head.class_weights = scaled_uniform({classes, embed_dim}, embed_dim, rng);
  head.scale = scale;
  head.margin = margin;
  head.validate();
  return head;
}

void AamHead::validate() const {
  if (!(scale > 0.0)) throw ConfigError("aam: scale must be positive");
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) throw ConfigError("aam: margin must lie in [0, pi/2)");
  if (class_weights.rank() != 2 || class_weights.rows() < 1) throw ConfigError("aam: need at least one class");
}

Var aam_loss(Var embedding, Var class_weights, std::size_t label, double scale, double margin) {
  const Tensor& e = embedding.value();
  const Tensor& w = class_weights.value();
  if (e.rank() != 1 || w.rank() != 2 || w.cols() != e.size()) {
    throw DimensionError("aam_loss: class weights " + shape_string(w.shape()) + " incompatible with embedding " +
                         shape_string(e.shape()));
  }
  if (label >= w.rows()) {
    throw InputError("aam_loss: label " + std::to_string(label) + " out of range for " + std::to_string(w.rows()) +
                     " classes");
  }
  Var cosines = matmul(l2_normalize_rows(class_weights), l2_normalize(embedding));
  return softmax_cross_entropy(angular_margin_logits(cosines, label, scale, margin), label);
}

AamLossResult aam_loss(const Tensor& embedding, std::size_t label, const AamHead& head) {
  head.validate();
  Tape tape;
  Var e = tape.parameter(embedding);
  Var w = tape.parameter(head.class_weights);
  Var loss = aam_loss(e, w, label, head.scale, head.margin);
  tape.backward(loss);
  return {loss.value()(0), e.grad(), w.grad()};
}

double cosine_score(const Tensor& enroll, const Tensor& test) {
  if (enroll.size() != test.size()) {
    throw DimensionError("cosine_score: lengths " + std::to_string(enroll.size()) + " and " +
                         std::to_string(test.size()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < enroll.size(); ++i) {
    dot += enroll(i) * test(i);
    na += enroll(i) * enroll(i);
    nb += test(i) * test(i);
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("cosine_score: zero-norm embedding");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace rjca
