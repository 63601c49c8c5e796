#include "rjca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rjca {

ScoreSet::ScoreSet(std::vector<ScoredTrial> trials) : trials_(std::move(trials)) {
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    if (!std::isfinite(trials_[i].score)) {
      throw InputError("score set: non-finite score at trial " + std::to_string(i));
    }
    if (trials_[i].target) ++targets_;
  }
  if (targets_ == 0) throw InputError("score set: no target trials");
  if (targets_ == trials_.size()) throw InputError("score set: no nontarget trials");
}

ScoreSet ScoreSet::from_scores(std::span<const double> targets, std::span<const double> nontargets) {
  std::vector<ScoredTrial> trials;
  trials.reserve(targets.size() + nontargets.size());
  for (double s : targets) trials.push_back({s, true});
  for (double s : nontargets) trials.push_back({s, false});
  return ScoreSet(std::move(trials));
}

void DcfParams::validate() const {
  if (!(p_target > 0.0 && p_target < 1.0)) throw InputError("dcf: p_target must lie in (0, 1)");
  if (!(c_miss > 0.0) || !(c_fa > 0.0)) throw InputError("dcf: costs must be positive");
}

double DcfParams::normalizer() const { return std::min(c_miss * p_target, c_fa * (1.0 - p_target)); }

std::vector<DetPoint> det_points(const ScoreSet& scores) {
  std::vector<ScoredTrial> sorted = scores.trials();
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredTrial& a, const ScoredTrial& b) { return a.score < b.score; });
  const double nt = static_cast<double>(scores.target_count());
  const double nn = static_cast<double>(scores.nontarget_count());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<DetPoint> sweep;
  sweep.reserve(sorted.size() + 2);
  sweep.push_back({-inf, 1.0, 0.0});
  std::size_t targets_below = 0, nontargets_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double tau = sorted[i].score;
    // Everything strictly below tau has been counted.
    sweep.push_back({tau, (nn - static_cast<double>(nontargets_below)) / nn, static_cast<double>(targets_below) / nt});
    for (; i < sorted.size() && sorted[i].score == tau; ++i) {
      if (sorted[i].target) {
        ++targets_below;
      } else {
        ++nontargets_below;
      }
    }
  }
  sweep.push_back({inf, 0.0, 1.0});
  return sweep;
}

OperatingPoint eer(std::span<const DetPoint> sweep) {
  if (sweep.size() < 2) throw InputError("eer: sweep needs at least two points");
  for (std::size_t k = 1; k < sweep.size(); ++k) {
    const DetPoint& cur = sweep[k];
    const double gap = cur.frr - cur.far;
    if (gap < 0.0) continue;
    if (gap == 0.0) return {cur.far, cur.threshold};
    const DetPoint& prev = sweep[k - 1];
    const double prev_gap = prev.frr - prev.far;
    const double lambda = -prev_gap / (gap - prev_gap);
    const double rate = prev.far + lambda * (cur.far - prev.far);
    double threshold;
    if (std::isinf(prev.threshold)) {
      threshold = cur.threshold;
    } else if (std::isinf(cur.threshold)) {
      threshold = prev.threshold;
    } else {
      threshold = prev.threshold + lambda * (cur.threshold - prev.threshold);
    }
    return {rate, threshold};
  }
  throw InputError("eer: sweep never reaches FRR >= FAR");
}

OperatingPoint eer(const ScoreSet& scores) { return eer(det_points(scores)); }

OperatingPoint min_dcf(std::span<const DetPoint> sweep, const DcfParams& params) {
  params.validate();
  if (sweep.empty()) throw InputError("min_dcf: empty sweep");
  OperatingPoint best{std::numeric_limits<double>::infinity(), 0.0};
  for (const DetPoint& p : sweep) {
    const double cost = params.c_miss * p.frr * params.p_target + params.c_fa * p.far * (1.0 - params.p_target);
    if (cost < best.value) best = {cost, p.threshold};
  }
  best.value /= params.normalizer();
  return best;
}

OperatingPoint min_dcf(const ScoreSet& scores, const DcfParams& params) {
  return min_dcf(det_points(scores), params);
}

MetricsReport compute_metrics(const ScoreSet& scores, const DcfParams& params) {
  MetricsReport r;
  r.det = det_points(scores);
  const OperatingPoint e = eer(r.det);
  const OperatingPoint d = min_dcf(r.det, params);
  r.eer = e.value;
  r.eer_threshold = e.threshold;
  r.min_dcf = d.value;
  r.dcf_threshold = d.threshold;
  r.dcf = params;
  r.targets = scores.target_count();
  r.nontargets = scores.nontarget_count();
  return r;
}

std::string MetricsReport::format_key_values() const {
  std::ostringstream os;
  char buf[128];
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, v);
    os << buf;
  };
  kv("eer", eer);
  kv("eer_threshold", eer_threshold);
  kv("min_dcf", min_dcf);
  kv("dcf_threshold", dcf_threshold);
  kv("p_target", dcf.p_target);
  kv("c_miss", dcf.c_miss);
  kv("c_fa", dcf.c_fa);
  os << "targets=" << targets << "\n" << "nontargets=" << nontargets << "\n";
  return os.str();
}

std::string MetricsReport::format() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %12s %14s\n", "metric", "value", "threshold");
  os << buf;
  std::snprintf(buf, sizeof buf, "%-8s %11.4f%% %14.6f\n", "EER", 100.0 * eer, eer_threshold);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-8s %12.4f %14.6f\n", "minDCF", min_dcf, dcf_threshold);
  os << buf;
  std::snprintf(buf, sizeof buf, "(%zu target / %zu nontarget trials, P_target=%g C_miss=%g C_fa=%g)\n", targets,
                nontargets, dcf.p_target, dcf.c_miss, dcf.c_fa);
  os << buf << "---\n" << format_key_values();
  return os.str();
}

ScoreSet read_scores(std::istream& in) {
  std::vector<ScoredTrial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string label;
    if (!(ls >> label)) continue;
    double score = 0.0;
    std::string extra;
    if ((label != "0" && label != "1") || !(ls >> score) || (ls >> extra)) {
      throw InputError("scores file line " + std::to_string(line_no) + ": expected `label score` with label 0 or 1");
    }
    trials.push_back({score, label == "1"});
  }
  return ScoreSet(std::move(trials));
}

ScoreSet read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scores file " + path.string());
  return read_scores(in);
}

void write_scores(std::ostream& out, std::span<const ScoredTrial> trials) {
  char buf[64];
  for (const auto& t : trials) {
    std::snprintf(buf, sizeof buf, "%d %.17g\n", t.target ? 1 : 0, t.score);
    out << buf;
  }
}

void write_scores(const std::filesystem::path& path, std::span<const ScoredTrial> trials) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write scores file " + path.string());
  write_scores(out, trials);
}

}  // namespace rjca
