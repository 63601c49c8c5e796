#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rjca/errors.hpp"

namespace rjca {

struct ScoredTrial {
  double score = 0.0;
  bool target = false;
};

// Labeled verification scores. Holds at least one target and one nontarget,
// all scores finite.
class ScoreSet {
 public:
  explicit ScoreSet(std::vector<ScoredTrial> trials);
  static ScoreSet from_scores(std::span<const double> targets, std::span<const double> nontargets);

  const std::vector<ScoredTrial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  std::size_t target_count() const { return targets_; }
  std::size_t nontarget_count() const { return trials_.size() - targets_; }

 private:
  std::vector<ScoredTrial> trials_;
  std::size_t targets_ = 0;
};

struct DcfParams {
  double p_target = 0.05;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void validate() const;
  // min(c_miss * p_target, c_fa * (1 - p_target))
  double normalizer() const;
};

// A trial is accepted when score >= threshold.
struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // nontargets accepted / nontargets
  double frr = 0.0;  // targets rejected / targets
};

struct OperatingPoint {
  double value = 0.0;
  double threshold = 0.0;
};

// Thresholds at -inf, every distinct score (ascending) and +inf.
std::vector<DetPoint> det_points(const ScoreSet& scores);

// FAR = FRR crossing of the sweep, interpolated linearly between the two
// neighbouring points when no sweep point sits exactly on it.
OperatingPoint eer(const ScoreSet& scores);
OperatingPoint eer(std::span<const DetPoint> sweep);

// Minimum over the sweep of c_miss*FRR*p + c_fa*FAR*(1-p), divided by
// DcfParams::normalizer().
OperatingPoint min_dcf(const ScoreSet& scores, const DcfParams& params = {});
OperatingPoint min_dcf(std::span<const DetPoint> sweep, const DcfParams& params);

struct MetricsReport {
  double eer = 0.0;
  double eer_threshold = 0.0;
  double min_dcf = 0.0;
  double dcf_threshold = 0.0;
  DcfParams dcf;
  std::size_t targets = 0;
  std::size_t nontargets = 0;
  std::vector<DetPoint> det;

  // Human-readable table followed by a `key=value` block.
  std::string format() const;
  std::string format_key_values() const;
};

MetricsReport compute_metrics(const ScoreSet& scores, const DcfParams& params = {});

// Scores file: one `label score` line per trial, label 1 = target, 0 = nontarget.
ScoreSet read_scores(std::istream& in);
ScoreSet read_scores(const std::filesystem::path& path);
void write_scores(std::ostream& out, std::span<const ScoredTrial> trials);
void write_scores(const std::filesystem::path& path, std::span<const ScoredTrial> trials);

}  // namespace rjca
