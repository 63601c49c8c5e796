#pragma once

#include <map>
#include <string>
#include <vector>

#include "rjca/dataset.hpp"
#include "rjca/metrics.hpp"
#include "rjca/model.hpp"

namespace rjca {

// A trial references an utterance the evaluation set does not contain.
class ResolutionError : public InputError {
 public:
  using InputError::InputError;
};

struct EvalOptions {
  // Embed every referenced utterance once; otherwise re-embed per trial.
  bool cache = true;
  DcfParams dcf;
};

struct Evaluation {
  std::vector<ScoredTrial> scores;  // trial order
  MetricsReport report;
};

// Throws ResolutionError listing every id the dataset lacks.
void check_trials_resolve(const Dataset& data, const std::vector<TrialPair>& trials);

// Embeddings of every utterance the trials reference, keyed by id.
std::map<std::string, Tensor> embed_utterances(const Model& model, const Dataset& data,
                                               const std::vector<std::string>& ids);

// Cosine scores of pre-head embeddings, then metrics.
Evaluation evaluate(const Model& model, const Dataset& data, const std::vector<TrialPair>& trials,
                    const EvalOptions& options = {});

// Score-level fusion baseline: w * s_audio + (1 - w) * s_visual, each score
// from its own (normally unimodal) model.
Evaluation evaluate_score_fusion(const Model& audio_model, const Model& visual_model, const Dataset& data,
                                 const std::vector<TrialPair>& trials, double audio_weight,
                                 const EvalOptions& options = {});

}  // namespace rjca
