#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rjca/train.hpp"

namespace rjca {

struct AblationRow {
  std::size_t iterations = 0;
  bool use_blstm = true;
  double eer = 0.0;
  double min_dcf = 0.0;
  double final_loss = 0.0;
  double seconds = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // BLSTM rows first, each block by ascending T

  // Fixed-width table followed by one `key=value` line per row.
  std::string format() const;
};

using AblationProgress = std::function<void(const AblationRow&)>;

// Trains and evaluates one RJCA model per (T, BLSTM) cell; everything else
// comes from `base`.
AblationReport run_iteration_ablation(const TrainConfig& base, const Dataset& data,
                                      const std::vector<TrialPair>& trials, std::vector<std::size_t> iterations,
                                      bool include_without_blstm, const AblationProgress& progress = {});

}  // namespace rjca
