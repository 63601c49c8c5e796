#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rjca/ops.hpp"
#include "rjca/params.hpp"
#include "rjca/random.hpp"

namespace rjca {

// Dimensions of the recursive joint cross-attention stack.
struct RjcaConfig {
  std::size_t audio_dim = 0;   // d_a
  std::size_t visual_dim = 0;  // d_v
  std::size_t segments = 0;    // L
  std::size_t iterations = 3;  // T
  bool use_blstm = true;
  // One weight set reused by every iteration instead of one per iteration.
  bool share_weights = false;

  std::size_t joint_dim() const { return audio_dim + visual_dim; }
  void validate() const;
};

// Learnable matrices of one joint cross-attention pass.
struct JcaIterationParams {
  Tensor joint_audio;    // W_ja, d_a x d
  Tensor joint_visual;   // W_jv, d_v x d
  Tensor corr_audio;     // W_ca, L x L
  Tensor corr_visual;    // W_cv, L x L
  Tensor attend_audio;   // W_ha, L x L
  Tensor attend_visual;  // W_hv, L x L

  static JcaIterationParams zeros(std::size_t audio_dim, std::size_t visual_dim, std::size_t segments);
  static JcaIterationParams random(std::size_t audio_dim, std::size_t visual_dim, std::size_t segments, Rng& rng);

  // Throws DimensionError naming the first weight whose shape is wrong.
  void check_shapes(std::size_t audio_dim, std::size_t visual_dim, std::size_t segments) const;

  void store(ParamStore& store, const std::string& prefix) const;
  static JcaIterationParams load(const ParamStore& store, const std::string& prefix);
};

// JcaIterationParams placed on a tape.
struct JcaWeights {
  Var joint_audio, joint_visual, corr_audio, corr_visual, attend_audio, attend_visual;

  static JcaWeights bind(Tape& tape, const JcaIterationParams& p, bool trainable);
  static JcaWeights from(const BoundParams& bound, const std::string& prefix);
};

struct FusedVars {
  Var audio;         // X_att,a  d_a x L
  Var visual;        // X_att,v  d_v x L
  Var concatenated;  // d x L
  Var corr_audio;    // C_a      L x L (last pass)
  Var corr_visual;   // C_v      L x L (last pass)
};

struct FusedFeatures {
  Tensor audio;
  Tensor visual;
  Tensor concatenated;
};

// J = [X_a ; X_v]. Throws DimensionError if the segment counts differ.
Var joint_representation(Var audio, Var visual);
Tensor joint_representation(const Tensor& audio, const Tensor& visual);

// One pass:
//   C_a = tanh(X_a^T W_ja J / sqrt(d))          (and C_v likewise)
//   H_a = relu(X_a W_ca C_a)
//   X_att,a = H_a W_ha + X_a
FusedVars jca_step(Var audio, Var visual, const JcaWeights& w);
FusedFeatures jca_step(const Tensor& audio, const Tensor& visual, const JcaIterationParams& params);

// Feeds the attended features back through jca_step once per weight set; the
// joint representation is rebuilt from the previous pass every time.
FusedVars rjca_forward(Var audio, Var visual, std::span<const JcaWeights> passes);
FusedFeatures rjca_forward(const Tensor& audio, const Tensor& visual,
                           std::span<const JcaIterationParams> passes);

// ---------------------------------------------------------------------------
// Baseline fusion strategies used for comparison.

enum class BaselineMode { score_level, concat, cross_attention };

BaselineMode parse_baseline_mode(const std::string& name);
std::string to_string(BaselineMode mode);

// w * s_a + (1 - w) * s_v.
double fuse_scores(double audio_score, double visual_score, double audio_weight);

// Plain cross-attention between the two modalities: the joint representation
// is replaced by the other modality, C_a = tanh(X_a^T W_xa X_v / sqrt(d)),
// C_v = tanh(X_v^T W_xv X_a / sqrt(d)); the rest matches jca_step.
struct CrossAttentionParams {
  Tensor cross_audio;    // d_a x d_v
  Tensor cross_visual;   // d_v x d_a
  Tensor corr_audio;     // L x L
  Tensor corr_visual;    // L x L
  Tensor attend_audio;   // L x L
  Tensor attend_visual;  // L x L

  static CrossAttentionParams zeros(std::size_t audio_dim, std::size_t visual_dim, std::size_t segments);
  static CrossAttentionParams random(std::size_t audio_dim, std::size_t visual_dim, std::size_t segments, Rng& rng);
  void check_shapes(std::size_t audio_dim, std::size_t visual_dim, std::size_t segments) const;
  void store(ParamStore& store, const std::string& prefix) const;
};

struct CrossAttentionWeights {
  Var cross_audio, cross_visual, corr_audio, corr_visual, attend_audio, attend_visual;

  static CrossAttentionWeights bind(Tape& tape, const CrossAttentionParams& p, bool trainable);
  static CrossAttentionWeights from(const BoundParams& bound, const std::string& prefix);
};

FusedVars cross_attention_step(Var audio, Var visual, const CrossAttentionWeights& w);
FusedFeatures cross_attention_step(const Tensor& audio, const Tensor& visual, const CrossAttentionParams& params);

struct BaselineInputs {
  // score_level
  double audio_score = 0.0;
  double visual_score = 0.0;
  double audio_weight = 0.5;
  // concat / cross_attention
  Tensor audio;
  Tensor visual;
  const CrossAttentionParams* cross = nullptr;
};

// score_level yields a fused score, the other modes fused features.
std::variant<double, FusedFeatures> baseline_fuse(BaselineMode mode, const BaselineInputs& in);

}  // namespace rjca
