#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rjca/fusion.hpp"
#include "rjca/objective.hpp"
#include "rjca/params.hpp"
#include "rjca/temporal.hpp"

namespace rjca {

// How the two modalities are combined before the temporal head.
enum class FusionMode { rjca, cross_attention, concat, audio_only, visual_only };

FusionMode parse_fusion_mode(const std::string& name);
std::string to_string(FusionMode mode);

struct ModelConfig {
  FusionMode fusion = FusionMode::rjca;
  std::size_t audio_dim = 16;
  std::size_t visual_dim = 16;
  std::size_t segments = 8;
  std::size_t iterations = 3;
  bool use_blstm = true;
  bool share_weights = false;
  std::size_t hidden = 64;      // BLSTM h per direction
  std::size_t bottleneck = 64;  // ASP a
  std::size_t embed_dim = 128;  // e
  std::size_t classes = 1;      // training speakers
  double aam_scale = kDefaultAamScale;
  double aam_margin = kDefaultAamMargin;

  RjcaConfig rjca() const;
  // Rows of the fused feature matrix fed to the temporal head.
  std::size_t fused_dim() const;
  // Rows of the frames fed to ASP.
  std::size_t frame_dim() const;
  void validate() const;
};

// Parameters live in a ParamStore under these prefixes:
//   fusion.<t>.   one JCA weight set per iteration (only fusion.0. when shared)
//   cross.        cross-attention baseline
//   blstm.        asp.   proj.   aam.class_weights
class Model {
 public:
  Model(ModelConfig config, ParamStore params);
  // Seeded initialization, drawn in the order fusion, blstm, asp, proj, aam.
  static Model init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  // Utterance embedding (pre-head), rank-1 of size embed_dim.
  Var embed(const BoundParams& bound, Var audio, Var visual) const;
  Tensor embed(const Tensor& audio, const Tensor& visual) const;

  Var loss(const BoundParams& bound, Var audio, Var visual, std::size_t label) const;

  // Throws DimensionError naming the first parameter whose shape is wrong.
  void check_params() const;

 private:
  Var fuse(const BoundParams& bound, Var audio, Var visual) const;

  ModelConfig config_;
  ParamStore params_;
};

std::string iteration_prefix(std::size_t t);

}  // namespace rjca
