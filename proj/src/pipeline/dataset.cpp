#include "rjca/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rjca/random.hpp"

namespace rjca {

namespace fs = std::filesystem;

// --- trial lists ------------------------------------------------------------

std::vector<TrialPair> parse_trial_list(std::istream& in) {
  std::vector<TrialPair> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string label, enroll, test, extra;
    if (!(ls >> label)) continue;
    if (!(ls >> enroll >> test) || (ls >> extra) || (label != "0" && label != "1")) {
      throw InputError("trial list line " + std::to_string(line_no) + ": expected `label enroll_id test_id` with label 0 or 1, got '" +
                       line + "'");
    }
    trials.push_back({label == "1", enroll, test});
  }
  return trials;
}

std::vector<TrialPair> parse_trial_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trial list " + path.string());
  return parse_trial_list(in);
}

void write_trial_list(std::ostream& out, const std::vector<TrialPair>& trials) {
  for (const auto& t : trials) out << (t.target ? 1 : 0) << ' ' << t.enroll_id << ' ' << t.test_id << '\n';
}

void write_trial_list(const fs::path& path, const std::vector<TrialPair>& trials) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write trial list " + path.string());
  write_trial_list(out, trials);
}

bool is_path_safe_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

// --- dataset ----------------------------------------------------------------

Dataset::Dataset(std::vector<Utterance> utterances) : utterances_(std::move(utterances)) {
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const Utterance& u = utterances_[i];
    if (!is_path_safe_id(u.id)) throw InputError("dataset: utterance id '" + u.id + "' is not path-safe");
    if (!index_.emplace(u.id, i).second) throw InputError("dataset: duplicate utterance id '" + u.id + "'");
    if (u.audio.rank() != 2 || u.visual.rank() != 2 || u.audio.cols() != u.visual.cols()) {
      throw DimensionError("dataset: utterance '" + u.id + "' has mismatched modalities " +
                           shape_string(u.audio.shape()) + " / " + shape_string(u.visual.shape()));
    }
    const Utterance& first = utterances_.front();
    if (u.audio.shape() != first.audio.shape() || u.visual.shape() != first.visual.shape()) {
      throw DimensionError("dataset: utterance '" + u.id + "' shape differs from '" + first.id + "'");
    }
  }
}

const Utterance& Dataset::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InputError("dataset: unknown utterance id '" + id + "'");
  return utterances_[it->second];
}

std::size_t Dataset::audio_dim() const { return utterances_.empty() ? 0 : utterances_.front().audio.rows(); }
std::size_t Dataset::visual_dim() const { return utterances_.empty() ? 0 : utterances_.front().visual.rows(); }
std::size_t Dataset::segments() const { return utterances_.empty() ? 0 : utterances_.front().audio.cols(); }

std::vector<std::size_t> Dataset::split_indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < utterances_.size(); ++i)
    if (utterances_[i].split == split) out.push_back(i);
  return out;
}

std::vector<std::string> Dataset::speakers(const std::string& split) const {
  std::set<std::string> names;
  for (const auto& u : utterances_)
    if (u.split == split) names.insert(u.speaker);
  return {names.begin(), names.end()};
}

fs::path audio_feature_path(const fs::path& dir, const std::string& id) {
  return dir / "features" / (id + ".audio.avf");
}

fs::path visual_feature_path(const fs::path& dir, const std::string& id) {
  return dir / "features" / (id + ".visual.avf");
}

FeatureMatrix fit_segments(const FeatureMatrix& m, std::size_t segments) {
  if (segments == 0 || m.cols() == segments) return m;
  Tensor out({m.rows(), segments});
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t t = 0; t < segments; ++t) out(r, t) = m(r, t % m.cols());
  return out;
}

Dataset load_dataset(const fs::path& dir, std::size_t segments) {
  std::ifstream manifest(dir / "manifest.tsv");
  if (!manifest) throw InputError("cannot open manifest " + (dir / "manifest.tsv").string());
  std::vector<Utterance> utts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || (line_no == 1 && line.rfind("id\t", 0) == 0)) continue;
    std::istringstream ls(line);
    Utterance u;
    if (!(ls >> u.id >> u.speaker >> u.split)) {
      throw InputError("manifest line " + std::to_string(line_no) + ": expected `id speaker split`");
    }
    if (!is_path_safe_id(u.id)) throw InputError("manifest line " + std::to_string(line_no) + ": unsafe id '" + u.id + "'");
    u.audio = fit_segments(load_features(audio_feature_path(dir, u.id)), segments);
    u.visual = fit_segments(load_features(visual_feature_path(dir, u.id)), segments);
    utts.push_back(std::move(u));
  }
  if (utts.empty()) throw InputError("manifest " + (dir / "manifest.tsv").string() + " lists no utterances");
  return Dataset(std::move(utts));
}

void save_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir / "features");
  std::ofstream manifest(dir / "manifest.tsv");
  if (!manifest) throw InputError("cannot write manifest in " + dir.string());
  manifest << "id\tspeaker\tsplit\n";
  for (const auto& u : data.utterances()) {
    manifest << u.id << '\t' << u.speaker << '\t' << u.split << '\n';
    save_features(u.audio, audio_feature_path(dir, u.id));
    save_features(u.visual, visual_feature_path(dir, u.id));
  }
}

// --- synthetic data ---------------------------------------------------------

void SynthConfig::validate() const {
  if (speakers < 1 || utterances_per_speaker < 1) throw ConfigError("synth: counts must be positive");
  if (audio_dim < 1 || visual_dim < 1 || segments < 1 || latent_dim < 1) {
    throw ConfigError("synth: dimensions must be positive");
  }
  if (audio_noise < 0.0 || visual_noise < 0.0) throw ConfigError("synth: noise levels must be non-negative");
  if (audio_smoothing < 0.0 || audio_smoothing >= 1.0) throw ConfigError("synth: audio_smoothing must lie in [0, 1)");
  if (holdout_speakers >= speakers && speakers > 1) throw ConfigError("synth: holdout_speakers must leave training speakers");
}

Dataset generate_synthetic_dataset(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  const Tensor audio_map = normal_tensor({cfg.audio_dim, cfg.latent_dim}, mix_scale, rng);
  const Tensor visual_map = normal_tensor({cfg.visual_dim, cfg.latent_dim}, mix_scale, rng);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double rho = cfg.audio_smoothing;
  const double innovation = std::sqrt(1.0 - rho * rho);
  const double audio_gain = cfg.standardize ? 1.0 / std::sqrt(1.0 + cfg.audio_noise * cfg.audio_noise) : 1.0;
  const double visual_gain = cfg.standardize ? 1.0 / std::sqrt(1.0 + cfg.visual_noise * cfg.visual_noise) : 1.0;

  std::vector<Utterance> utts;
  utts.reserve(cfg.speakers * cfg.utterances_per_speaker);
  const std::size_t first_holdout = cfg.speakers - cfg.holdout_speakers;
  for (std::size_t s = 0; s < cfg.speakers; ++s) {
    char speaker[32];
    std::snprintf(speaker, sizeof speaker, "spk%03zu", s);
    const Tensor latent = normal_tensor({cfg.latent_dim}, 1.0, rng);
    const Tensor audio_mean = matmul(audio_map, latent);
    const Tensor visual_mean = matmul(visual_map, latent);
    for (std::size_t k = 0; k < cfg.utterances_per_speaker; ++k) {
      Utterance u;
      char id[48];
      std::snprintf(id, sizeof id, "%s_u%03zu", speaker, k);
      u.id = id;
      u.speaker = speaker;
      u.split = s >= first_holdout ? "test" : "train";
      u.audio = Tensor({cfg.audio_dim, cfg.segments});
      u.visual = Tensor({cfg.visual_dim, cfg.segments});
      for (std::size_t r = 0; r < cfg.audio_dim; ++r) {
        double noise = unit(rng);
        for (std::size_t t = 0; t < cfg.segments; ++t) {
          if (t > 0) noise = rho * noise + innovation * unit(rng);
          u.audio(r, t) = audio_gain * (audio_mean(r) + cfg.audio_noise * noise);
        }
      }
      for (std::size_t r = 0; r < cfg.visual_dim; ++r)
        for (std::size_t t = 0; t < cfg.segments; ++t) u.visual(r, t) = visual_gain * (visual_mean(r) + cfg.visual_noise * unit(rng));
      // The on-disk format is single precision; keep memory identical to disk.
      for (double& v : u.audio.values()) v = static_cast<float>(v);
      for (double& v : u.visual.values()) v = static_cast<float>(v);
      utts.push_back(std::move(u));
    }
  }
  return Dataset(std::move(utts));
}

std::vector<TrialPair> balanced_trials(const Dataset& data, const std::string& split, std::uint64_t seed) {
  const std::vector<std::size_t> idx = data.split_indices(split);
  std::vector<TrialPair> targets, nontargets;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const Utterance& x = data.utterances()[idx[a]];
      const Utterance& y = data.utterances()[idx[b]];
      (x.speaker == y.speaker ? targets : nontargets).push_back({x.speaker == y.speaker, x.id, y.id});
    }
  }
  Rng rng(seed);
  std::shuffle(nontargets.begin(), nontargets.end(), rng);
  if (nontargets.size() > targets.size()) nontargets.resize(targets.size());
  targets.insert(targets.end(), nontargets.begin(), nontargets.end());
  return targets;
}

void generate_synthetic_dataset(const SynthConfig& cfg, const fs::path& dir) {
  const Dataset data = generate_synthetic_dataset(cfg);
  save_dataset(data, dir);
  write_trial_list(dir / "trials.txt", balanced_trials(data, cfg.holdout_speakers > 0 ? "test" : "train", cfg.seed + 1));
  std::ofstream out(dir / "synth.cfg");
  out << "speakers = " << cfg.speakers << "\n"
      << "utterances_per_speaker = " << cfg.utterances_per_speaker << "\n"
      << "audio_dim = " << cfg.audio_dim << "\n"
      << "visual_dim = " << cfg.visual_dim << "\n"
      << "segments = " << cfg.segments << "\n"
      << "latent_dim = " << cfg.latent_dim << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", cfg.audio_noise);
  out << "audio_noise = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", cfg.visual_noise);
  out << "visual_noise = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", cfg.audio_smoothing);
  out << "audio_smoothing = " << buf << "\n"
      << "holdout_speakers = " << cfg.holdout_speakers << "\n"
      << "standardize = " << (cfg.standardize ? "true" : "false") << "\n"
      << "seed = " << cfg.seed << "\n";
}

}  // namespace rjca
