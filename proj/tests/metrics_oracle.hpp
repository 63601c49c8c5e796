#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "rjca/metrics.hpp"

namespace rjca::testing {

struct OracleMetrics {
  double eer = 0.0;
  double min_dcf = 0.0;
};

// Brute force: thresholds at -inf, the midpoint of every pair of consecutive
// distinct scores, and +inf; error rates by direct counting at each one.
inline OracleMetrics brute_force_metrics(const std::vector<double>& targets, const std::vector<double>& nontargets,
                                         const DcfParams& dcf) {
  std::vector<double> all(targets);
  all.insert(all.end(), nontargets.begin(), nontargets.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> thresholds{-inf};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) thresholds.push_back(0.5 * (all[i] + all[i + 1]));
  thresholds.push_back(inf);

  std::vector<double> far, frr;
  for (double tau : thresholds) {
    std::size_t fa = 0, miss = 0;
    for (double s : nontargets) fa += s >= tau ? 1 : 0;
    for (double s : targets) miss += s < tau ? 1 : 0;
    far.push_back(static_cast<double>(fa) / static_cast<double>(nontargets.size()));
    frr.push_back(static_cast<double>(miss) / static_cast<double>(targets.size()));
  }

  OracleMetrics out;
  for (std::size_t k = 1; k < thresholds.size(); ++k) {
    const double gap = frr[k] - far[k];
    if (gap < 0.0) continue;
    const double prev_gap = frr[k - 1] - far[k - 1];
    out.eer = gap == 0.0 ? far[k] : far[k - 1] + (-prev_gap / (gap - prev_gap)) * (far[k] - far[k - 1]);
    break;
  }
  double best = inf;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    best = std::min(best, dcf.c_miss * frr[k] * dcf.p_target + dcf.c_fa * far[k] * (1.0 - dcf.p_target));
  }
  out.min_dcf = best / std::min(dcf.c_miss * dcf.p_target, dcf.c_fa * (1.0 - dcf.p_target));
  return out;
}

}  // namespace rjca::testing
