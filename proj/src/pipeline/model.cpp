#include "rjca/model.hpp"

#include <cmath>

namespace rjca {

FusionMode parse_fusion_mode(const std::string& name) {
  if (name == "rjca") return FusionMode::rjca;
  if (name == "cross_attention") return FusionMode::cross_attention;
  if (name == "concat") return FusionMode::concat;
  if (name == "audio_only") return FusionMode::audio_only;
  if (name == "visual_only") return FusionMode::visual_only;
  throw ConfigError("unknown fusion mode '" + name +
                    "' (expected rjca, cross_attention, concat, audio_only or visual_only)");
}

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::rjca: return "rjca";
    case FusionMode::cross_attention: return "cross_attention";
    case FusionMode::concat: return "concat";
    case FusionMode::audio_only: return "audio_only";
    case FusionMode::visual_only: return "visual_only";
  }
  return "?";
}

RjcaConfig ModelConfig::rjca() const {
  RjcaConfig c;
  c.audio_dim = audio_dim;
  c.visual_dim = visual_dim;
  c.segments = segments;
  c.iterations = iterations;
  c.use_blstm = use_blstm;
  c.share_weights = share_weights;
  return c;
}

std::size_t ModelConfig::fused_dim() const {
  switch (fusion) {
    case FusionMode::audio_only: return audio_dim;
    case FusionMode::visual_only: return visual_dim;
    default: return audio_dim + visual_dim;
  }
}

std::size_t ModelConfig::frame_dim() const { return use_blstm ? 2 * hidden : fused_dim(); }

void ModelConfig::validate() const {
  rjca().validate();
  if (use_blstm && hidden < 1) throw ConfigError("model: hidden must be >= 1");
  if (bottleneck < 1 || embed_dim < 1) throw ConfigError("model: bottleneck and embed_dim must be >= 1");
  if (classes < 1) throw ConfigError("model: need at least one class");
  AamHead head;
  head.class_weights = Tensor({classes, 1});
  head.scale = aam_scale;
  head.margin = aam_margin;
  head.validate();
}

std::string iteration_prefix(std::size_t t) { return "fusion." + std::to_string(t) + "."; }

namespace {

std::size_t fusion_param_sets(const ModelConfig& c) {
  if (c.fusion != FusionMode::rjca) return 0;
  return c.share_weights ? 1 : c.iterations;
}

// Same names as Model::init, all zero; used for shape validation.
ParamStore zero_params(const ModelConfig& c) {
  ParamStore s;
  for (std::size_t t = 0; t < fusion_param_sets(c); ++t) {
    JcaIterationParams::zeros(c.audio_dim, c.visual_dim, c.segments).store(s, iteration_prefix(t));
  }
  if (c.fusion == FusionMode::cross_attention) {
    CrossAttentionParams::zeros(c.audio_dim, c.visual_dim, c.segments).store(s, "cross.");
  }
  if (c.use_blstm) BlstmParams::zeros(c.fused_dim(), c.hidden).store(s, "blstm.");
  AspParams::zeros(c.frame_dim(), c.bottleneck).store(s, "asp.");
  s.set("proj.weight", Tensor({c.embed_dim, 2 * c.frame_dim()}));
  s.set("proj.bias", Tensor({c.embed_dim}));
  s.set("aam.class_weights", Tensor({c.classes, c.embed_dim}));
  return s;
}

}  // namespace

Model::Model(ModelConfig config, ParamStore params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  check_params();
}

Model Model::init(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(seed);
  ParamStore s;
  for (std::size_t t = 0; t < fusion_param_sets(c); ++t) {
    JcaIterationParams::random(c.audio_dim, c.visual_dim, c.segments, rng).store(s, iteration_prefix(t));
  }
  if (c.fusion == FusionMode::cross_attention) {
    CrossAttentionParams::random(c.audio_dim, c.visual_dim, c.segments, rng).store(s, "cross.");
  }
  if (c.use_blstm) BlstmParams::random(c.fused_dim(), c.hidden, rng).store(s, "blstm.");
  AspParams::random(c.frame_dim(), c.bottleneck, rng).store(s, "asp.");
  EmbeddingProjection::random(2 * c.frame_dim(), c.embed_dim, rng).store(s, "proj.");
  s.set("aam.class_weights", AamHead::random(c.classes, c.embed_dim, rng, c.aam_scale, c.aam_margin).class_weights);
  return Model(c, std::move(s));
}

void Model::check_params() const {
  const ParamStore expected = zero_params(config_);
  for (const auto& [name, t] : expected) {
    if (!params_.contains(name)) throw DimensionError("model: missing parameter '" + name + "'");
    const Tensor& have = params_.get(name);
    if (have.shape() != t.shape()) {
      throw DimensionError("model: parameter '" + name + "' has shape " + shape_string(have.shape()) + ", expected " +
                           shape_string(t.shape()));
    }
  }
  for (const auto& [name, t] : params_) {
    if (!expected.contains(name)) throw DimensionError("model: unexpected parameter '" + name + "'");
  }
}

Var Model::fuse(const BoundParams& bound, Var audio, Var visual) const {
  switch (config_.fusion) {
    case FusionMode::rjca: {
      std::vector<JcaWeights> passes;
      for (std::size_t t = 0; t < config_.iterations; ++t) {
        passes.push_back(JcaWeights::from(bound, iteration_prefix(config_.share_weights ? 0 : t)));
      }
      return rjca_forward(audio, visual, passes).concatenated;
    }
    case FusionMode::cross_attention:
      return cross_attention_step(audio, visual, CrossAttentionWeights::from(bound, "cross.")).concatenated;
    case FusionMode::concat: return joint_representation(audio, visual);
    case FusionMode::audio_only: return audio;
    case FusionMode::visual_only: return visual;
  }
  throw ConfigError("model: bad fusion mode");
}

Var Model::embed(const BoundParams& bound, Var audio, Var visual) const {
  const std::size_t L = config_.segments;
  if (audio.value().shape() != Shape{config_.audio_dim, L} || visual.value().shape() != Shape{config_.visual_dim, L}) {
    throw DimensionError("model: inputs " + shape_string(audio.value().shape()) + " / " +
                         shape_string(visual.value().shape()) + " do not match configured " +
                         std::to_string(config_.audio_dim) + "x" + std::to_string(L) + " / " +
                         std::to_string(config_.visual_dim) + "x" + std::to_string(L));
  }
  Var frames = fuse(bound, audio, visual);
  if (config_.use_blstm) frames = blstm_forward(frames, BlstmWeights::from(bound, "blstm."));
  Var pooled = asp(frames, AspWeights::from(bound, "asp.")).pooled;
  return project_embedding(pooled, ProjectionWeights::from(bound, "proj."));
}

Tensor Model::embed(const Tensor& audio, const Tensor& visual) const {
  Tape tape;
  BoundParams bound(tape, params_, false);
  return embed(bound, tape.constant(audio), tape.constant(visual)).value();
}

Var Model::loss(const BoundParams& bound, Var audio, Var visual, std::size_t label) const {
  if (label >= config_.classes) {
    throw InputError("model: label " + std::to_string(label) + " out of range for " +
                     std::to_string(config_.classes) + " classes");
  }
  return aam_loss(embed(bound, audio, visual), bound["aam.class_weights"], label, config_.aam_scale,
                  config_.aam_margin);
}

}  // namespace rjca
