#include "rjca/ablation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "rjca/evaluate.hpp"

namespace rjca {

std::string AblationReport::format() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-4s %-6s %9s %8s %11s %8s\n", "T", "BLSTM", "EER(%)", "minDCF", "final_loss",
                "seconds");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-4zu %-6s %9.3f %8.4f %11.5f %8.1f\n", r.iterations, r.use_blstm ? "yes" : "no",
                  100.0 * r.eer, r.min_dcf, r.final_loss, r.seconds);
    out += buf;
  }
  out += "---\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "T=%zu blstm=%d eer=%.17g min_dcf=%.17g final_loss=%.17g\n", r.iterations,
                  r.use_blstm ? 1 : 0, r.eer, r.min_dcf, r.final_loss);
    out += buf;
  }
  return out;
}

AblationReport run_iteration_ablation(const TrainConfig& base, const Dataset& data,
                                      const std::vector<TrialPair>& trials, std::vector<std::size_t> iterations,
                                      bool include_without_blstm, const AblationProgress& progress) {
  if (iterations.empty()) throw ConfigError("ablation: no iteration counts given");
  std::sort(iterations.begin(), iterations.end());
  iterations.erase(std::unique(iterations.begin(), iterations.end()), iterations.end());
  check_trials_resolve(data, trials);

  AblationReport report;
  std::vector<bool> blstm_settings{true};
  if (include_without_blstm) blstm_settings.push_back(false);
  for (bool blstm : blstm_settings) {
    for (std::size_t T : iterations) {
      TrainConfig cfg = base;
      cfg.model.fusion = FusionMode::rjca;
      cfg.model.iterations = T;
      cfg.model.use_blstm = blstm;
      cfg.out_dir.clear();
      const auto start = std::chrono::steady_clock::now();
      TrainResult trained = train(cfg, data);
      const Evaluation ev = evaluate(trained.model, data, trials);
      AblationRow row;
      row.iterations = T;
      row.use_blstm = blstm;
      row.eer = ev.report.eer;
      row.min_dcf = ev.report.min_dcf;
      row.final_loss = trained.epoch_losses.empty() ? 0.0 : trained.epoch_losses.back();
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.rows.push_back(row);
      if (progress) progress(row);
    }
  }
  return report;
}

}  // namespace rjca
