#include "rjca/fusion.hpp"

#include <cmath>

namespace rjca {

void RjcaConfig::validate() const {
  if (audio_dim < 1 || visual_dim < 1 || segments < 1) {
    throw ConfigError("rjca: audio_dim, visual_dim and segments must all be >= 1");
  }
  if (iterations < 1) throw ConfigError("rjca: iterations must be >= 1");
}

namespace {

void expect_shape(const Tensor& t, const Shape& expected, const char* name) {
  if (t.shape() != expected) {
    throw DimensionError(std::string("weight ") + name + " has shape " + shape_string(t.shape()) +
                         ", expected " + shape_string(expected));
  }
}

void expect_features(const Tensor& audio, const Tensor& visual, const char* op) {
  if (audio.rank() != 2 || visual.rank() != 2) {
    throw DimensionError(std::string(op) + ": features must be rank-2, got " + shape_string(audio.shape()) +
                         " and " + shape_string(visual.shape()));
  }
  if (audio.cols() != visual.cols()) {
    throw DimensionError(std::string(op) + ": segment counts differ, audio " + shape_string(audio.shape()) +
                         " vs visual " + shape_string(visual.shape()));
  }
}

template <typename Weights>
void expect_square(const Weights& w, std::size_t L) {
  expect_shape(w.corr_audio.value(), {L, L}, "corr_audio (W_ca)");
  expect_shape(w.corr_visual.value(), {L, L}, "corr_visual (W_cv)");
  expect_shape(w.attend_audio.value(), {L, L}, "attend_audio (W_ha)");
  expect_shape(w.attend_visual.value(), {L, L}, "attend_visual (W_hv)");
}

// Shared tail of every attention variant: H = relu(X W_c C), X_att = H W_h + X.
Var attend(Var x, Var corr_weight, Var corr, Var attend_weight) {
  Var h = relu(matmul(matmul(x, corr_weight), corr));
  return add(matmul(h, attend_weight), x);
}

FusedFeatures to_features(const FusedVars& v) {
  return FusedFeatures{v.audio.value(), v.visual.value(), v.concatenated.value()};
}

}  // namespace

// --- JcaIterationParams -----------------------------------------------------

JcaIterationParams JcaIterationParams::zeros(std::size_t da, std::size_t dv, std::size_t L) {
  const std::size_t d = da + dv;
  return {Tensor({da, d}), Tensor({dv, d}), Tensor({L, L}), Tensor({L, L}), Tensor({L, L}), Tensor({L, L})};
}

JcaIterationParams JcaIterationParams::random(std::size_t da, std::size_t dv, std::size_t L, Rng& rng) {
  const std::size_t d = da + dv;
  JcaIterationParams p;
  p.joint_audio = scaled_uniform({da, d}, d, rng);
  p.joint_visual = scaled_uniform({dv, d}, d, rng);
  p.corr_audio = scaled_uniform({L, L}, L, rng);
  p.corr_visual = scaled_uniform({L, L}, L, rng);
  p.attend_audio = scaled_uniform({L, L}, L, rng);
  p.attend_visual = scaled_uniform({L, L}, L, rng);
  return p;
}

void JcaIterationParams::check_shapes(std::size_t da, std::size_t dv, std::size_t L) const {
  const std::size_t d = da + dv;
  expect_shape(joint_audio, {da, d}, "joint_audio (W_ja)");
  expect_shape(joint_visual, {dv, d}, "joint_visual (W_jv)");
  expect_shape(corr_audio, {L, L}, "corr_audio (W_ca)");
  expect_shape(corr_visual, {L, L}, "corr_visual (W_cv)");
  expect_shape(attend_audio, {L, L}, "attend_audio (W_ha)");
  expect_shape(attend_visual, {L, L}, "attend_visual (W_hv)");
}

void JcaIterationParams::store(ParamStore& s, const std::string& prefix) const {
  s.set(prefix + "joint_audio", joint_audio);
  s.set(prefix + "joint_visual", joint_visual);
  s.set(prefix + "corr_audio", corr_audio);
  s.set(prefix + "corr_visual", corr_visual);
  s.set(prefix + "attend_audio", attend_audio);
  s.set(prefix + "attend_visual", attend_visual);
}

JcaIterationParams JcaIterationParams::load(const ParamStore& s, const std::string& prefix) {
  return {s.get(prefix + "joint_audio"),  s.get(prefix + "joint_visual"), s.get(prefix + "corr_audio"),
          s.get(prefix + "corr_visual"),  s.get(prefix + "attend_audio"), s.get(prefix + "attend_visual")};
}

JcaWeights JcaWeights::bind(Tape& tape, const JcaIterationParams& p, bool trainable) {
  auto put = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  return {put(p.joint_audio), put(p.joint_visual), put(p.corr_audio),
          put(p.corr_visual), put(p.attend_audio), put(p.attend_visual)};
}

JcaWeights JcaWeights::from(const BoundParams& b, const std::string& prefix) {
  return {b[prefix + "joint_audio"], b[prefix + "joint_visual"], b[prefix + "corr_audio"],
          b[prefix + "corr_visual"], b[prefix + "attend_audio"], b[prefix + "attend_visual"]};
}

// --- joint cross-attention --------------------------------------------------

Var joint_representation(Var audio, Var visual) {
  expect_features(audio.value(), visual.value(), "joint_representation");
  return concat_rows(audio, visual);
}

Tensor joint_representation(const Tensor& audio, const Tensor& visual) {
  Tape tape;
  return joint_representation(tape.constant(audio), tape.constant(visual)).value();
}

FusedVars jca_step(Var audio, Var visual, const JcaWeights& w) {
  expect_features(audio.value(), visual.value(), "jca_step");
  const std::size_t da = audio.value().rows(), dv = visual.value().rows(), L = audio.value().cols();
  const std::size_t d = da + dv;
  expect_shape(w.joint_audio.value(), {da, d}, "joint_audio (W_ja)");
  expect_shape(w.joint_visual.value(), {dv, d}, "joint_visual (W_jv)");
  expect_square(w, L);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(da + dv));
  Var joint = concat_rows(audio, visual);
  Var corr_a = tanh(scale(matmul(matmul(transpose(audio), w.joint_audio), joint), inv_sqrt_d));
  Var corr_v = tanh(scale(matmul(matmul(transpose(visual), w.joint_visual), joint), inv_sqrt_d));
  Var att_a = attend(audio, w.corr_audio, corr_a, w.attend_audio);
  Var att_v = attend(visual, w.corr_visual, corr_v, w.attend_visual);
  return FusedVars{att_a, att_v, concat_rows(att_a, att_v), corr_a, corr_v};
}

FusedFeatures jca_step(const Tensor& audio, const Tensor& visual, const JcaIterationParams& params) {
  Tape tape;
  return to_features(jca_step(tape.constant(audio), tape.constant(visual), JcaWeights::bind(tape, params, false)));
}

FusedVars rjca_forward(Var audio, Var visual, std::span<const JcaWeights> passes) {
  if (passes.empty()) throw ConfigError("rjca_forward: at least one iteration is required");
  FusedVars out = jca_step(audio, visual, passes[0]);
  for (std::size_t t = 1; t < passes.size(); ++t) out = jca_step(out.audio, out.visual, passes[t]);
  return out;
}

FusedFeatures rjca_forward(const Tensor& audio, const Tensor& visual, std::span<const JcaIterationParams> passes) {
  if (passes.empty()) throw ConfigError("rjca_forward: at least one iteration is required");
  Tape tape;
  std::vector<JcaWeights> bound;
  for (const auto& p : passes) bound.push_back(JcaWeights::bind(tape, p, false));
  return to_features(rjca_forward(tape.constant(audio), tape.constant(visual), bound));
}

// --- baselines --------------------------------------------------------------

BaselineMode parse_baseline_mode(const std::string& name) {
  if (name == "score_level") return BaselineMode::score_level;
  if (name == "concat") return BaselineMode::concat;
  if (name == "cross_attention") return BaselineMode::cross_attention;
  throw ConfigError("unknown baseline fusion mode '" + name + "'");
}

std::string to_string(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::score_level: return "score_level";
    case BaselineMode::concat: return "concat";
    case BaselineMode::cross_attention: return "cross_attention";
  }
  return "?";
}

double fuse_scores(double audio_score, double visual_score, double audio_weight) {
  return audio_weight * audio_score + (1.0 - audio_weight) * visual_score;
}

CrossAttentionParams CrossAttentionParams::zeros(std::size_t da, std::size_t dv, std::size_t L) {
  return {Tensor({da, dv}), Tensor({dv, da}), Tensor({L, L}), Tensor({L, L}), Tensor({L, L}), Tensor({L, L})};
}

CrossAttentionParams CrossAttentionParams::random(std::size_t da, std::size_t dv, std::size_t L, Rng& rng) {
  CrossAttentionParams p;
  p.cross_audio = scaled_uniform({da, dv}, dv, rng);
  p.cross_visual = scaled_uniform({dv, da}, da, rng);
  p.corr_audio = scaled_uniform({L, L}, L, rng);
  p.corr_visual = scaled_uniform({L, L}, L, rng);
  p.attend_audio = scaled_uniform({L, L}, L, rng);
  p.attend_visual = scaled_uniform({L, L}, L, rng);
  return p;
}

void CrossAttentionParams::check_shapes(std::size_t da, std::size_t dv, std::size_t L) const {
  expect_shape(cross_audio, {da, dv}, "cross_audio");
  expect_shape(cross_visual, {dv, da}, "cross_visual");
  expect_shape(corr_audio, {L, L}, "corr_audio");
  expect_shape(corr_visual, {L, L}, "corr_visual");
  expect_shape(attend_audio, {L, L}, "attend_audio");
  expect_shape(attend_visual, {L, L}, "attend_visual");
}

void CrossAttentionParams::store(ParamStore& s, const std::string& prefix) const {
  s.set(prefix + "cross_audio", cross_audio);
  s.set(prefix + "cross_visual", cross_visual);
  s.set(prefix + "corr_audio", corr_audio);
  s.set(prefix + "corr_visual", corr_visual);
  s.set(prefix + "attend_audio", attend_audio);
  s.set(prefix + "attend_visual", attend_visual);
}

CrossAttentionWeights CrossAttentionWeights::bind(Tape& tape, const CrossAttentionParams& p, bool trainable) {
  auto put = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  return {put(p.cross_audio), put(p.cross_visual), put(p.corr_audio),
          put(p.corr_visual), put(p.attend_audio), put(p.attend_visual)};
}

CrossAttentionWeights CrossAttentionWeights::from(const BoundParams& b, const std::string& prefix) {
  return {b[prefix + "cross_audio"], b[prefix + "cross_visual"], b[prefix + "corr_audio"],
          b[prefix + "corr_visual"], b[prefix + "attend_audio"], b[prefix + "attend_visual"]};
}

FusedVars cross_attention_step(Var audio, Var visual, const CrossAttentionWeights& w) {
  expect_features(audio.value(), visual.value(), "cross_attention_step");
  const std::size_t da = audio.value().rows(), dv = visual.value().rows(), L = audio.value().cols();
  expect_shape(w.cross_audio.value(), {da, dv}, "cross_audio");
  expect_shape(w.cross_visual.value(), {dv, da}, "cross_visual");
  expect_square(w, L);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(da + dv));
  Var corr_a = tanh(scale(matmul(matmul(transpose(audio), w.cross_audio), visual), inv_sqrt_d));
  Var corr_v = tanh(scale(matmul(matmul(transpose(visual), w.cross_visual), audio), inv_sqrt_d));
  Var att_a = attend(audio, w.corr_audio, corr_a, w.attend_audio);
  Var att_v = attend(visual, w.corr_visual, corr_v, w.attend_visual);
  return FusedVars{att_a, att_v, concat_rows(att_a, att_v), corr_a, corr_v};
}

FusedFeatures cross_attention_step(const Tensor& audio, const Tensor& visual, const CrossAttentionParams& params) {
  Tape tape;
  return to_features(
      cross_attention_step(tape.constant(audio), tape.constant(visual), CrossAttentionWeights::bind(tape, params, false)));
}

std::variant<double, FusedFeatures> baseline_fuse(BaselineMode mode, const BaselineInputs& in) {
  switch (mode) {
    case BaselineMode::score_level:
      return fuse_scores(in.audio_score, in.visual_score, in.audio_weight);
    case BaselineMode::concat: {
      Tensor joint = joint_representation(in.audio, in.visual);
      return FusedFeatures{in.audio, in.visual, std::move(joint)};
    }
    case BaselineMode::cross_attention:
      if (in.cross == nullptr) throw ConfigError("baseline_fuse: cross_attention requires parameters");
      return cross_attention_step(in.audio, in.visual, *in.cross);
  }
  throw ConfigError("baseline_fuse: unknown mode");
}

}  // namespace rjca
