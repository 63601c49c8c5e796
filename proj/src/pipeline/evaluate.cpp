#include "rjca/evaluate.hpp"

#include <set>

#include "rjca/fusion.hpp"
#include "rjca/objective.hpp"

namespace rjca {

namespace {

std::vector<std::string> referenced_ids(const std::vector<TrialPair>& trials) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& t : trials) {
    for (const std::string* id : {&t.enroll_id, &t.test_id}) {
      if (seen.insert(*id).second) ids.push_back(*id);
    }
  }
  return ids;
}

std::vector<double> cosine_scores(const Model& model, const Dataset& data, const std::vector<TrialPair>& trials,
                                  bool cache) {
  std::vector<double> out;
  out.reserve(trials.size());
  if (cache) {
    const auto emb = embed_utterances(model, data, referenced_ids(trials));
    for (const auto& t : trials) out.push_back(cosine_score(emb.at(t.enroll_id), emb.at(t.test_id)));
    return out;
  }
  for (const auto& t : trials) {
    const Utterance& a = data.at(t.enroll_id);
    const Utterance& b = data.at(t.test_id);
    out.push_back(cosine_score(model.embed(a.audio, a.visual), model.embed(b.audio, b.visual)));
  }
  return out;
}

Evaluation finish(const std::vector<TrialPair>& trials, const std::vector<double>& scores, const DcfParams& dcf) {
  Evaluation ev;
  ev.scores.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) ev.scores.push_back({scores[i], trials[i].target});
  ev.report = compute_metrics(ScoreSet(ev.scores), dcf);
  return ev;
}

}  // namespace

void check_trials_resolve(const Dataset& data, const std::vector<TrialPair>& trials) {
  if (trials.empty()) throw InputError("evaluate: empty trial list");
  std::vector<std::string> missing;
  for (const std::string& id : referenced_ids(trials))
    if (!data.contains(id)) missing.push_back(id);
  if (missing.empty()) return;
  std::string msg = "evaluate: " + std::to_string(missing.size()) + " trial utterance(s) not found:";
  for (const auto& id : missing) msg += " " + id;
  throw ResolutionError(msg);
}

std::map<std::string, Tensor> embed_utterances(const Model& model, const Dataset& data,
                                               const std::vector<std::string>& ids) {
  std::map<std::string, Tensor> out;
  for (const auto& id : ids) {
    if (out.count(id)) continue;
    const Utterance& u = data.at(id);
    out.emplace(id, model.embed(u.audio, u.visual));
  }
  return out;
}

Evaluation evaluate(const Model& model, const Dataset& data, const std::vector<TrialPair>& trials,
                    const EvalOptions& options) {
  check_trials_resolve(data, trials);
  return finish(trials, cosine_scores(model, data, trials, options.cache), options.dcf);
}

Evaluation evaluate_score_fusion(const Model& audio_model, const Model& visual_model, const Dataset& data,
                                 const std::vector<TrialPair>& trials, double audio_weight,
                                 const EvalOptions& options) {
  check_trials_resolve(data, trials);
  const std::vector<double> sa = cosine_scores(audio_model, data, trials, options.cache);
  const std::vector<double> sv = cosine_scores(visual_model, data, trials, options.cache);
  std::vector<double> fused(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) fused[i] = fuse_scores(sa[i], sv[i], audio_weight);
  return finish(trials, fused, options.dcf);
}

}  // namespace rjca
