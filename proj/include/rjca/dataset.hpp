#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rjca/feature_io.hpp"

namespace rjca {

struct TrialPair {
  bool target = false;
  std::string enroll_id;
  std::string test_id;

  bool operator==(const TrialPair&) const = default;
};

// One trial per line: `label enroll_id test_id`, label 1 = target, 0 = nontarget.
// Blank lines are skipped; anything else malformed throws InputError naming the line.
std::vector<TrialPair> parse_trial_list(std::istream& in);
std::vector<TrialPair> parse_trial_list(const std::filesystem::path& path);
void write_trial_list(std::ostream& out, const std::vector<TrialPair>& trials);
void write_trial_list(const std::filesystem::path& path, const std::vector<TrialPair>& trials);

// Ids must be non-empty and use only [A-Za-z0-9._-].
bool is_path_safe_id(const std::string& id);

struct Utterance {
  std::string id;
  std::string speaker;
  std::string split;  // "train" or "test"
  FeatureMatrix audio;   // d_a x L
  FeatureMatrix visual;  // d_v x L
};

// In-memory collection of utterances with a fixed segment count.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Utterance> utterances);

  const std::vector<Utterance>& utterances() const { return utterances_; }
  std::size_t size() const { return utterances_.size(); }
  const Utterance& at(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  std::size_t audio_dim() const;
  std::size_t visual_dim() const;
  std::size_t segments() const;

  // Utterance indices of one split, in manifest order.
  std::vector<std::size_t> split_indices(const std::string& split) const;
  // Sorted distinct speakers of one split.
  std::vector<std::string> speakers(const std::string& split) const;

 private:
  std::vector<Utterance> utterances_;
  std::map<std::string, std::size_t> index_;
};

// Directory layout:
//   manifest.tsv          header `id<TAB>speaker<TAB>split`, one row per utterance
//   features/<id>.audio.avf, features/<id>.visual.avf
//   trials.txt            held-out trial list
// When `segments` is nonzero every matrix is cut or cyclically repeated to
// that many columns; otherwise all files must already agree.
Dataset load_dataset(const std::filesystem::path& dir, std::size_t segments = 0);
void save_dataset(const Dataset& data, const std::filesystem::path& dir);

std::filesystem::path audio_feature_path(const std::filesystem::path& dir, const std::string& id);
std::filesystem::path visual_feature_path(const std::filesystem::path& dir, const std::string& id);

FeatureMatrix fit_segments(const FeatureMatrix& m, std::size_t segments);

struct SynthConfig {
  std::size_t speakers = 50;
  std::size_t utterances_per_speaker = 10;
  std::size_t audio_dim = 16;
  std::size_t visual_dim = 16;
  std::size_t segments = 8;
  std::size_t latent_dim = 8;
  double audio_noise = 1.0;
  double visual_noise = 3.0;
  // AR(1) coefficient of the audio noise across segments.
  double audio_smoothing = 0.7;
  // Speakers held out for the trial list.
  std::size_t holdout_speakers = 10;
  // Divide each modality by sqrt(1 + noise^2) so every entry has unit
  // variance, as with standardized pretrained features.
  bool standardize = true;
  std::uint64_t seed = 1;

  void validate() const;
};

// Speaker k gets a latent identity z_k; audio columns are A z_k plus AR(1)
// noise, visual columns V z_k plus white noise, with A and V fixed random
// mixing maps. Writes the directory layout above plus synth.cfg, with a
// balanced trial list over the held-out speakers.
Dataset generate_synthetic_dataset(const SynthConfig& config);
void generate_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& dir);

std::vector<TrialPair> balanced_trials(const Dataset& data, const std::string& split, std::uint64_t seed);

}  // namespace rjca
