// rjca: synthetic data, training, evaluation and checks for the recursive
// joint cross-attention fusion model.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rjca/ablation.hpp"
#include "rjca/checkpoint.hpp"
#include "rjca/evaluate.hpp"
#include "rjca/gradcheck_suite.hpp"

namespace {

using namespace rjca;

// Config files are flat `key = value`; keys without a section belong to the
// subcommand being run.
class FlatConfig : public CLI::ConfigINI {
 public:
  explicit FlatConfig(CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigINI::from_config(in);
    const auto subs = app_.get_subcommands();
    if (!subs.empty()) {
      for (auto& item : items)
        if (item.parents.empty()) item.parents = {subs.front()->get_name()};
    }
    return items;
  }

 private:
  CLI::App& app_;
};

struct ModelFlags {
  std::string fusion = "rjca";
};

void add_train_options(CLI::App* sub, TrainConfig& c, ModelFlags& flags) {
  ModelConfig& m = c.model;
  sub->add_option("--fusion", flags.fusion, "rjca | cross_attention | concat | audio_only | visual_only")
      ->capture_default_str();
  sub->add_option("--iterations,-T", m.iterations, "recursion steps T")->capture_default_str();
  sub->add_flag("--use-blstm,--use_blstm,!--no-blstm", m.use_blstm, "temporal BLSTM before pooling")
      ->capture_default_str();
  sub->add_flag("--share-weights,--share_weights", m.share_weights, "one JCA weight set for all iterations");
  sub->add_option("--hidden", m.hidden, "BLSTM hidden size per direction")->capture_default_str();
  sub->add_option("--bottleneck", m.bottleneck, "ASP attention bottleneck")->capture_default_str();
  sub->add_option("--embed-dim,--embed_dim", m.embed_dim, "embedding size")->capture_default_str();
  sub->add_option("--aam-scale,--aam_scale", m.aam_scale, "AAM scale s")->capture_default_str();
  sub->add_option("--aam-margin,--aam_margin", m.aam_margin, "AAM margin m (radians)")->capture_default_str();
  sub->add_option("--optimizer", c.optimizer, "adam | momentum")->capture_default_str();
  sub->add_option("--learning-rate,--learning_rate", c.learning_rate)->capture_default_str();
  sub->add_option("--momentum", c.momentum, "momentum coefficient (momentum optimizer)")->capture_default_str();
  sub->add_option("--batch-size,--batch_size", c.batch_size)->capture_default_str();
  sub->add_option("--epochs", c.epochs)->capture_default_str();
  sub->add_option("--seed", c.seed)->capture_default_str();
}

void finish_model_flags(TrainConfig& c, const ModelFlags& flags) { c.model.fusion = parse_fusion_mode(flags.fusion); }

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  generate_synthetic_dataset(a.cfg, a.out);
  const std::size_t n = a.cfg.speakers * a.cfg.utterances_per_speaker;
  const auto trials = parse_trial_list(std::filesystem::path(a.out) / "trials.txt");
  std::printf("wrote %zu utterances (%zu speakers, %zu held out) and %zu trials to %s\n", n, a.cfg.speakers,
              a.cfg.holdout_speakers, trials.size(), a.out.c_str());
  std::printf("seed=%llu\n", static_cast<unsigned long long>(a.cfg.seed));
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  TrainConfig cfg;
  ModelFlags flags;
  std::size_t segments = 0;
};

void run_train(TrainArgs& a) {
  finish_model_flags(a.cfg, a.flags);
  if (a.cfg.out_dir.empty()) throw ConfigError("train: --out is required");
  const Dataset data = load_dataset(a.cfg.data_dir, a.segments);
  std::printf("seed=%llu fusion=%s T=%zu blstm=%s train_utterances=%zu speakers=%zu\n",
              static_cast<unsigned long long>(a.cfg.seed), to_string(a.cfg.model.fusion).c_str(),
              a.cfg.model.iterations, a.cfg.model.use_blstm ? "yes" : "no", data.split_indices("train").size(),
              training_speakers(data).size());
  const auto start = std::chrono::steady_clock::now();
  train(a.cfg, data, [&](std::size_t epoch, double loss) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("epoch %3zu  loss %.6f  (%.1fs)\n", epoch, loss, s);
    std::fflush(stdout);
  });
  std::printf("checkpoint %s\n", (std::filesystem::path(a.cfg.out_dir) / "final.rjck").c_str());
}

// --- evaluate ----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string fuse_with;
  double audio_weight = 0.5;
  std::string data;
  std::string trials;
  std::string scores_out;
  std::string scores_in;
  std::string report_out;
  bool no_cache = false;
  DcfParams dcf;
};

void run_evaluate(const EvalArgs& a) {
  MetricsReport report;
  if (!a.scores_in.empty()) {
    report = compute_metrics(read_scores(std::filesystem::path(a.scores_in)), a.dcf);
  } else {
    if (a.checkpoint.empty() || a.data.empty()) throw ConfigError("evaluate: --checkpoint and --data are required");
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const Model model = model_from_checkpoint(ckpt);
    const Dataset data = load_dataset(a.data, model.config().segments);
    const std::filesystem::path trial_path =
        a.trials.empty() ? std::filesystem::path(a.data) / "trials.txt" : std::filesystem::path(a.trials);
    const auto trials = parse_trial_list(trial_path);
    EvalOptions opts;
    opts.cache = !a.no_cache;
    opts.dcf = a.dcf;
    Evaluation ev;
    if (a.fuse_with.empty()) {
      std::printf("seed=%llu fusion=%s\n", static_cast<unsigned long long>(ckpt.config.seed),
                  to_string(model.config().fusion).c_str());
      ev = evaluate(model, data, trials, opts);
    } else {
      const Checkpoint other = load_checkpoint(a.fuse_with);
      std::printf("seed=%llu fusion=score_level audio_weight=%s\n",
                  static_cast<unsigned long long>(ckpt.config.seed), real(a.audio_weight).c_str());
      ev = evaluate_score_fusion(model, model_from_checkpoint(other), data, trials, a.audio_weight, opts);
    }
    if (!a.scores_out.empty()) write_scores(std::filesystem::path(a.scores_out), ev.scores);
    report = ev.report;
  }
  std::fputs(report.format().c_str(), stdout);
  if (!a.report_out.empty()) write_text(a.report_out, report.format_key_values());
}

// --- embed -------------------------------------------------------------------

struct EmbedArgs {
  std::string checkpoint;
  std::string data;
  std::vector<std::string> ids;
  std::string out;
};

void run_embed(const EmbedArgs& a) {
  const Model model = model_from_checkpoint(load_checkpoint(a.checkpoint));
  const Dataset data = load_dataset(a.data, model.config().segments);
  std::vector<std::string> ids = a.ids;
  if (ids.empty())
    for (const auto& u : data.utterances()) ids.push_back(u.id);
  std::vector<TrialPair> refs;
  for (const auto& id : ids) refs.push_back({false, id, id});
  check_trials_resolve(data, refs);
  const auto emb = embed_utterances(model, data, ids);
  std::ostringstream os;
  char buf[32];
  for (const auto& id : ids) {
    os << id;
    for (double v : emb.at(id).values()) {
      std::snprintf(buf, sizeof buf, " %.9g", v);
      os << buf;
    }
    os << '\n';
  }
  if (a.out.empty()) {
    std::fputs(os.str().c_str(), stdout);
  } else {
    write_text(a.out, os.str());
    std::printf("wrote %zu embeddings of size %zu to %s\n", ids.size(), model.config().embed_dim, a.out.c_str());
  }
}

// --- gradcheck ---------------------------------------------------------------

struct GradArgs {
  std::uint64_t seed = 7;
  double eps = 1e-5;
  double tolerance = 1e-4;
};

int run_gradcheck_cmd(const GradArgs& a) {
  const auto cases = standard_gradcheck_cases(a.seed);
  const GradcheckReport report = run_gradcheck(cases, a.eps, a.tolerance);
  std::printf("seed=%llu\n", static_cast<unsigned long long>(a.seed));
  std::fputs(report.format().c_str(), stdout);
  return report.passed() ? 0 : 1;
}

// --- ablate ------------------------------------------------------------------

struct AblateArgs {
  TrainArgs train;
  std::string trials;
  std::vector<std::size_t> iterations{1, 2, 3, 4, 5};
  bool with_no_blstm = false;
  std::string report_out;
};

void run_ablate(AblateArgs& a) {
  finish_model_flags(a.train.cfg, a.train.flags);
  const Dataset data = load_dataset(a.train.cfg.data_dir, a.train.segments);
  const std::filesystem::path trial_path = a.trials.empty()
                                               ? std::filesystem::path(a.train.cfg.data_dir) / "trials.txt"
                                               : std::filesystem::path(a.trials);
  const auto trials = parse_trial_list(trial_path);
  std::printf("seed=%llu epochs=%zu\n", static_cast<unsigned long long>(a.train.cfg.seed), a.train.cfg.epochs);
  const AblationReport report =
      run_iteration_ablation(a.train.cfg, data, trials, a.iterations, a.with_no_blstm, [](const AblationRow& r) {
        std::printf("  T=%zu blstm=%s eer=%.4f (%.1fs)\n", r.iterations, r.use_blstm ? "yes" : "no", r.eer, r.seconds);
        std::fflush(stdout);
      });
  std::fputs(report.format().c_str(), stdout);
  if (!a.report_out.empty()) write_text(a.report_out, report.format());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive joint cross-attention fusion for audio-visual person verification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<FlatConfig>(app));
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "flat `key = value` file; command-line flags override it");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic audio-visual dataset");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--speakers", synth.cfg.speakers)->capture_default_str();
  synth_cmd->add_option("--utterances", synth.cfg.utterances_per_speaker, "utterances per speaker")
      ->capture_default_str();
  synth_cmd->add_option("--audio-dim,--audio_dim", synth.cfg.audio_dim)->capture_default_str();
  synth_cmd->add_option("--visual-dim,--visual_dim", synth.cfg.visual_dim)->capture_default_str();
  synth_cmd->add_option("--segments,-L", synth.cfg.segments)->capture_default_str();
  synth_cmd->add_option("--latent-dim,--latent_dim", synth.cfg.latent_dim)->capture_default_str();
  synth_cmd->add_option("--audio-noise,--audio_noise", synth.cfg.audio_noise)->capture_default_str();
  synth_cmd->add_option("--visual-noise,--visual_noise", synth.cfg.visual_noise)->capture_default_str();
  synth_cmd->add_option("--audio-smoothing,--audio_smoothing", synth.cfg.audio_smoothing,
                        "AR(1) coefficient of the audio noise")
      ->capture_default_str();
  synth_cmd->add_option("--holdout,--holdout_speakers", synth.cfg.holdout_speakers, "held-out test speakers")
      ->capture_default_str();
  synth_cmd->add_flag("--standardize,!--raw-scale", synth.cfg.standardize,
                     "scale each modality to unit variance per entry")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.cfg.seed)->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model on the train split");
  train_cmd->add_option("--data,--data_dir", tr.cfg.data_dir, "dataset directory")->required();
  train_cmd->add_option("--out,--out_dir", tr.cfg.out_dir, "checkpoint directory")->required();
  train_cmd->add_option("--segments,-L", tr.segments, "cut or repeat features to L segments (0 = as stored)");
  add_train_options(train_cmd, tr.cfg, tr.flags);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a trial list and report EER / minDCF");
  eval_cmd->add_option("--checkpoint", ev.checkpoint);
  eval_cmd->add_option("--data,--data_dir", ev.data);
  eval_cmd->add_option("--trials", ev.trials, "trial list (default <data>/trials.txt)");
  eval_cmd->add_option("--fuse-with", ev.fuse_with,
                       "second checkpoint for score-level fusion; --checkpoint supplies s_a, this one s_v");
  eval_cmd->add_option("--audio-weight", ev.audio_weight, "w in w*s_a + (1-w)*s_v")->capture_default_str();
  eval_cmd->add_option("--scores", ev.scores_out, "write `label score` lines here");
  eval_cmd->add_option("--from-scores", ev.scores_in, "compute metrics from an existing scores file");
  eval_cmd->add_option("--report", ev.report_out, "write the key=value metrics block here");
  eval_cmd->add_flag("--no-cache", ev.no_cache, "re-embed utterances for every trial");
  eval_cmd->add_option("--p-target", ev.dcf.p_target)->capture_default_str();
  eval_cmd->add_option("--c-miss", ev.dcf.c_miss)->capture_default_str();
  eval_cmd->add_option("--c-fa", ev.dcf.c_fa)->capture_default_str();

  EmbedArgs em;
  auto* embed_cmd = app.add_subcommand("embed", "write utterance embeddings (`id v1 v2 ...`)");
  embed_cmd->add_option("--checkpoint", em.checkpoint)->required();
  embed_cmd->add_option("--data,--data_dir", em.data)->required();
  embed_cmd->add_option("--ids", em.ids, "utterance ids (default: all)");
  embed_cmd->add_option("--out", em.out, "output file (default: stdout)");

  GradArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every layer");
  grad_cmd->add_option("--seed", gc.seed)->capture_default_str();
  grad_cmd->add_option("--eps", gc.eps)->capture_default_str();
  grad_cmd->add_option("--tolerance", gc.tolerance)->capture_default_str();

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "train and evaluate RJCA for each iteration count");
  ablate_cmd->add_option("--data,--data_dir", ab.train.cfg.data_dir)->required();
  ablate_cmd->add_option("--trials", ab.trials, "trial list (default <data>/trials.txt)");
  ablate_cmd->add_option("--segments,-L", ab.train.segments);
  ablate_cmd->add_option("--grid", ab.iterations, "iteration counts")->capture_default_str();
  ablate_cmd->add_flag("--without-blstm", ab.with_no_blstm, "also run every T without the BLSTM");
  ablate_cmd->add_option("--report", ab.report_out, "write the report here");
  add_train_options(ablate_cmd, ab.train.cfg, ab.train.flags);


  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth_cmd->parsed()) run_synth(synth);
    if (train_cmd->parsed()) run_train(tr);
    if (eval_cmd->parsed()) run_evaluate(ev);
    if (embed_cmd->parsed()) run_embed(em);
    if (grad_cmd->parsed()) return run_gradcheck_cmd(gc);
    if (ablate_cmd->parsed()) run_ablate(ab);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
