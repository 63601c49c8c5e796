#include <doctest.h>

#include <unistd.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "rjca/ablation.hpp"
#include "rjca/checkpoint.hpp"
#include "rjca/evaluate.hpp"
#include "rjca/gradcheck_suite.hpp"
#include "test_support.hpp"

using namespace rjca;
using rjca::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("rjca_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SynthConfig small_synth(std::uint64_t seed = 3) {
  SynthConfig c;
  c.speakers = 8;
  c.utterances_per_speaker = 4;
  c.audio_dim = 4;
  c.visual_dim = 3;
  c.segments = 4;
  c.latent_dim = 3;
  c.holdout_speakers = 3;
  c.seed = seed;
  return c;
}

TrainConfig small_train(FusionMode mode = FusionMode::rjca) {
  TrainConfig c;
  c.model.fusion = mode;
  c.model.iterations = 2;
  c.model.hidden = 4;
  c.model.bottleneck = 4;
  c.model.embed_dim = 6;
  c.epochs = 3;
  c.batch_size = 4;
  c.learning_rate = 5e-3;
  c.seed = 11;
  return c;
}

double cosine_raw(const Tensor& a, const Tensor& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a(i) * b(i);
    na += a(i) * a(i);
    nb += b(i) * b(i);
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

// --- feature files ------------------------------------------------------------

TEST_CASE("feature file round trip keeps shape and single-precision values") {
  Rng rng(1);
  Tensor m = random_tensor({16, 8}, rng, -5, 5);
  std::stringstream buf;
  write_features(buf, m);
  CHECK(buf.str().size() == 12 + 16 * 8 * 4);
  CHECK(buf.str().substr(0, 4) == "AVF1");
  Tensor back = read_features(buf);
  REQUIRE(back.shape() == Shape{16, 8});
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(back(i) == static_cast<double>(static_cast<float>(m(i))));

  // a second round trip is exact
  std::stringstream again;
  write_features(again, back);
  CHECK(read_features(again) == back);
}

TEST_CASE("feature file errors are distinct") {
  std::stringstream bad_magic("AVF2\x01\0\0\0\x01\0\0\0\0\0\0\0");
  CHECK_THROWS_AS(read_features(bad_magic), FeatureFormatError);

  std::stringstream truncated;
  truncated.write("AVF1", 4);
  le::put_u32(truncated, 4);
  le::put_u32(truncated, 4);
  for (int i = 0; i < 15; ++i) le::put_f32(truncated, 1.0f);
  CHECK_THROWS_AS(read_features(truncated), FeatureTruncatedError);

  std::stringstream zero;
  zero.write("AVF1", 4);
  le::put_u32(zero, 0);
  le::put_u32(zero, 4);
  CHECK_THROWS_AS(read_features(zero), FeatureExtentError);

  std::stringstream huge;
  huge.write("AVF1", 4);
  le::put_u32(huge, 0xFFFFFFFFu);
  le::put_u32(huge, 0xFFFFFFFFu);
  CHECK_THROWS_AS(read_features(huge), FeatureExtentError);

  std::stringstream header_only("AVF1\x02\0");
  CHECK_THROWS_AS(read_features(header_only), FeatureTruncatedError);

  CHECK_THROWS_AS(load_features("/nonexistent/x.avf"), FeatureIoError);
}

TEST_CASE("fit_segments cuts or repeats columns cyclically") {
  Tensor m = Tensor::matrix({{1, 2, 3}});
  CHECK(fit_segments(m, 5) == Tensor::matrix({{1, 2, 3, 1, 2}}));
  CHECK(fit_segments(m, 2) == Tensor::matrix({{1, 2}}));
  CHECK(fit_segments(m, 0) == m);
}

// --- trial lists ----------------------------------------------------------------

TEST_CASE("trial list parsing") {
  std::stringstream in("1 a b\n0 a c\n\n1 c d\n");
  auto trials = parse_trial_list(in);
  REQUIRE(trials.size() == 3);
  CHECK(trials[0] == TrialPair{true, "a", "b"});
  CHECK(trials[1] == TrialPair{false, "a", "c"});
  CHECK(trials[2] == TrialPair{true, "c", "d"});

  std::stringstream bad("1 a b\n2 a b\n");
  try {
    parse_trial_list(bad);
    FAIL("expected a parse error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::stringstream short_line("1 a\n");
  CHECK_THROWS_AS(parse_trial_list(short_line), InputError);
  std::stringstream extra("0 a b c\n");
  CHECK_THROWS_AS(parse_trial_list(extra), InputError);

  std::stringstream out;
  write_trial_list(out, trials);
  CHECK(parse_trial_list(out) == trials);
}

TEST_CASE("path-safe ids") {
  CHECK(is_path_safe_id("spk001_u02.a-b"));
  CHECK_FALSE(is_path_safe_id(""));
  CHECK_FALSE(is_path_safe_id(".."));
  CHECK_FALSE(is_path_safe_id("a/b"));
  CHECK_FALSE(is_path_safe_id("a b"));
}

// --- synthetic data ---------------------------------------------------------------

TEST_CASE("synthetic dataset is byte-identical for a fixed seed") {
  TempDir tmp("synth");
  SynthConfig c;  // 50 speakers x 10 utterances
  generate_synthetic_dataset(c, tmp.path / "a");
  generate_synthetic_dataset(c, tmp.path / "b");
  c.seed = 2;
  generate_synthetic_dataset(c, tmp.path / "c");

  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(tmp.path / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(entry.path(), tmp.path / "a");
    REQUIRE(fs::exists(tmp.path / "b" / rel));
    CHECK(slurp(entry.path()) == slurp(tmp.path / "b" / rel));
  }
  CHECK(files == 1000 + 3);  // features, manifest, trials, synth.cfg
  CHECK(slurp(tmp.path / "a" / "features" / "spk000_u000.audio.avf") !=
        slurp(tmp.path / "c" / "features" / "spk000_u000.audio.avf"));

  const Dataset d = load_dataset(tmp.path / "a");
  CHECK(d.size() == 500);
  CHECK(d.audio_dim() == 16);
  CHECK(d.visual_dim() == 16);
  CHECK(d.segments() == 8);
  CHECK(d.speakers("train").size() == 40);
  CHECK(d.speakers("test").size() == 10);
  CHECK(d.split_indices("test").size() == 100);

  const auto trials = parse_trial_list(tmp.path / "a" / "trials.txt");
  std::size_t targets = 0;
  for (const auto& t : trials) {
    targets += t.target;
    CHECK(d.at(t.enroll_id).split == "test");
    CHECK((d.at(t.enroll_id).speaker == d.at(t.test_id).speaker) == t.target);
  }
  CHECK(targets == 10 * 45);
  CHECK(trials.size() == 2 * targets);
}

TEST_CASE("in-memory generation matches the files on disk") {
  TempDir tmp("mem");
  const SynthConfig c = small_synth();
  generate_synthetic_dataset(c, tmp.path);
  const Dataset mem = generate_synthetic_dataset(c);
  const Dataset disk = load_dataset(tmp.path);
  REQUIRE(mem.size() == disk.size());
  for (std::size_t i = 0; i < mem.size(); ++i) {
    CHECK(mem.utterances()[i].id == disk.utterances()[i].id);
    CHECK(mem.utterances()[i].audio == disk.utterances()[i].audio);
    CHECK(mem.utterances()[i].visual == disk.utterances()[i].visual);
  }
}

TEST_CASE("with near-zero noise, intra-speaker audio similarity exceeds inter-speaker") {
  SynthConfig c;
  c.audio_noise = 1e-3;
  c.visual_noise = 3e-3;
  const Dataset d = generate_synthetic_dataset(c);
  double intra = 0, inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
  const auto& u = d.utterances();
  for (std::size_t i = 0; i < u.size(); i += 3) {
    for (std::size_t j = i + 1; j < u.size(); j += 7) {
      const double s = cosine_raw(u[i].audio, u[j].audio);
      if (u[i].speaker == u[j].speaker) {
        intra += s;
        ++n_intra;
      } else {
        inter += s;
        ++n_inter;
      }
    }
  }
  REQUIRE(n_intra > 10);
  CHECK(intra / n_intra > 0.99);
  CHECK(intra / n_intra > inter / n_inter + 0.5);
}

TEST_CASE("synth config validation") {
  SynthConfig c;
  c.speakers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SynthConfig{};
  c.holdout_speakers = 50;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SynthConfig{};
  c.audio_smoothing = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("dataset rejects duplicate ids and mismatched shapes") {
  Utterance a{"a", "s", "train", Tensor({2, 3}), Tensor({1, 3})};
  Utterance b = a;
  CHECK_THROWS_AS(Dataset({a, b}), InputError);
  b.id = "b";
  b.visual = Tensor({1, 4});
  CHECK_THROWS_AS(Dataset({a, b}), DimensionError);
  b.id = "../x";
  CHECK_THROWS_AS(Dataset({b}), InputError);
}

// --- model ------------------------------------------------------------------------

TEST_CASE("model parameter names and shape checks") {
  ModelConfig mc;
  mc.audio_dim = 3;
  mc.visual_dim = 2;
  mc.segments = 4;
  mc.hidden = 5;
  mc.bottleneck = 3;
  mc.embed_dim = 6;
  mc.classes = 4;
  const Model m = Model::init(mc, 1);
  CHECK(m.params().contains("fusion.0.joint_audio"));
  CHECK(m.params().contains("fusion.2.attend_visual"));
  CHECK_FALSE(m.params().contains("fusion.3.joint_audio"));
  CHECK(m.params().get("blstm.fwd.input_weights").shape() == Shape{20, 5});
  CHECK(m.params().get("asp.weight").shape() == Shape{3, 10});
  CHECK(m.params().get("proj.weight").shape() == Shape{6, 20});
  CHECK(m.params().get("aam.class_weights").shape() == Shape{4, 6});

  Rng rng(2);
  CHECK(m.embed(random_tensor({3, 4}, rng), random_tensor({2, 4}, rng)).shape() == Shape{6});
  CHECK_THROWS_AS(m.embed(random_tensor({3, 5}, rng), random_tensor({2, 5}, rng)), DimensionError);

  ParamStore broken = m.params();
  broken.set("fusion.1.corr_audio", Tensor({3, 3}));
  CHECK_THROWS_AS(Model(mc, broken), DimensionError);

  ModelConfig shared = mc;
  shared.share_weights = true;
  const Model s = Model::init(shared, 1);
  CHECK(s.params().contains("fusion.0.joint_audio"));
  CHECK_FALSE(s.params().contains("fusion.1.joint_audio"));

  ModelConfig flat = mc;
  flat.use_blstm = false;
  flat.fusion = FusionMode::audio_only;
  const Model f = Model::init(flat, 1);
  CHECK_FALSE(f.params().contains("blstm.fwd.bias"));
  CHECK(f.params().get("asp.weight").shape() == Shape{3, 3});
  CHECK(f.embed(random_tensor({3, 4}, rng), random_tensor({2, 4}, rng)).shape() == Shape{6});

  CHECK(parse_fusion_mode(to_string(FusionMode::cross_attention)) == FusionMode::cross_attention);
  CHECK_THROWS_AS(parse_fusion_mode("self_attention"), ConfigError);
}

TEST_CASE("model with zero fusion weights embeds like the concat model") {
  ModelConfig mc;
  mc.audio_dim = 3;
  mc.visual_dim = 2;
  mc.segments = 4;
  mc.hidden = 3;
  mc.bottleneck = 3;
  mc.embed_dim = 4;
  mc.classes = 2;
  Model r = Model::init(mc, 5);
  for (auto& [name, t] : r.params())
    if (name.rfind("fusion.", 0) == 0) t = Tensor(t.shape());
  ModelConfig cc = mc;
  cc.fusion = FusionMode::concat;
  ParamStore rest;
  for (const auto& [name, t] : r.params())
    if (name.rfind("fusion.", 0) != 0) rest.set(name, t);
  const Model c(cc, rest);
  Rng rng(3);
  const Tensor a = random_tensor({3, 4}, rng), v = random_tensor({2, 4}, rng);
  CHECK(r.embed(a, v) == c.embed(a, v));
}

// --- training -------------------------------------------------------------------------

TEST_CASE("train config text round trip") {
  TrainConfig c = small_train(FusionMode::concat);
  c.learning_rate = 0.1 + 0.2;
  c.model.share_weights = true;
  c.data_dir = "/data/x";
  const TrainConfig back = TrainConfig::from_text(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.model.fusion == FusionMode::concat);
  CHECK_THROWS_AS(TrainConfig::from_text("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_text("epochs = many\n"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_text("use_blstm = maybe\n"), ConfigError);
}

TEST_CASE("a single training speaker gives zero loss from the first step") {
  SynthConfig sc = small_synth();
  sc.speakers = 1;
  sc.holdout_speakers = 0;
  const Dataset d = generate_synthetic_dataset(sc);
  const TrainResult r = train(small_train(), d);
  REQUIRE(r.epoch_losses.size() == 3);
  for (double l : r.epoch_losses) CHECK(l == 0.0);
}

TEST_CASE("zero learning rate keeps parameters and loss constant") {
  const Dataset d = generate_synthetic_dataset(small_synth());
  TrainConfig c = small_train();
  c.learning_rate = 0.0;
  const TrainResult r = train(c, d);
  for (double l : r.epoch_losses) CHECK(l == r.epoch_losses.front());
  const Model init = Model::init(r.config.model, c.seed);
  CHECK(r.model.params() == quantize(init.params()));

  c.optimizer = "momentum";
  const TrainResult m = train(c, d);
  CHECK(m.model.params() == quantize(init.params()));
}

TEST_CASE("training lowers the loss and is deterministic") {
  const Dataset d = generate_synthetic_dataset(small_synth());
  TrainConfig c = small_train();
  c.epochs = 6;
  const TrainResult a = train(c, d);
  const TrainResult b = train(c, d);
  CHECK(a.epoch_losses.back() < a.epoch_losses.front());
  CHECK(a.epoch_losses == b.epoch_losses);
  CHECK(a.model.params() == b.model.params());
  CHECK(format_loss_log(a.epoch_losses) == format_loss_log(b.epoch_losses));

  c.seed = 12;
  CHECK(train(c, d).epoch_losses != a.epoch_losses);
}

TEST_CASE("divergence aborts with a diagnostic") {
  const Dataset d = generate_synthetic_dataset(small_synth());
  TrainConfig c = small_train();
  c.optimizer = "momentum";
  c.learning_rate = 1e300;
  CHECK_THROWS_AS(train(c, d), TrainingDiverged);
}

TEST_CASE("training writes per-epoch checkpoints and the loss log") {
  TempDir tmp("train");
  const Dataset d = generate_synthetic_dataset(small_synth());
  TrainConfig c = small_train();
  c.out_dir = (tmp.path / "run").string();
  const TrainResult r = train(c, d);
  for (const char* f : {"epoch_001.rjck", "epoch_002.rjck", "epoch_003.rjck", "final.rjck", "loss.log"})
    CHECK(fs::exists(tmp.path / "run" / f));
  CHECK(slurp(tmp.path / "run" / "loss.log") == format_loss_log(r.epoch_losses));
  CHECK(slurp(tmp.path / "run" / "epoch_003.rjck") == slurp(tmp.path / "run" / "final.rjck"));
}

// --- checkpoints ------------------------------------------------------------------------

TEST_CASE("checkpoint save/load/save is byte-identical and evaluation matches") {
  TempDir tmp("ckpt");
  const Dataset d = generate_synthetic_dataset(small_synth());
  const TrainResult r = train(small_train(), d);
  save_checkpoint({r.config, r.model.params()}, tmp.path / "a.rjck");
  const Checkpoint loaded = load_checkpoint(tmp.path / "a.rjck");
  save_checkpoint(loaded, tmp.path / "b.rjck");
  CHECK(slurp(tmp.path / "a.rjck") == slurp(tmp.path / "b.rjck"));
  CHECK(loaded.params == r.model.params());
  CHECK(loaded.config.to_text() == r.config.to_text());

  const auto trials = balanced_trials(d, "test", 1);
  const Evaluation mem = evaluate(r.model, d, trials);
  const Evaluation disk = evaluate(model_from_checkpoint(loaded), d, trials);
  REQUIRE(mem.scores.size() == disk.scores.size());
  for (std::size_t i = 0; i < mem.scores.size(); ++i) CHECK(mem.scores[i].score == disk.scores[i].score);
  CHECK(mem.report.format_key_values() == disk.report.format_key_values());
}

TEST_CASE("checkpoint corruption is detected") {
  const Dataset d = generate_synthetic_dataset(small_synth());
  TrainConfig c = small_train();
  c.epochs = 1;
  const TrainResult r = train(c, d);
  std::stringstream buf;
  write_checkpoint(buf, {r.config, r.model.params()});
  const std::string bytes = buf.str();

  std::stringstream bad("XJCK" + bytes.substr(4));
  CHECK_THROWS_AS(read_checkpoint(bad), CheckpointError);
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(cut), CheckpointError);
  std::stringstream tail(bytes + "x");
  CHECK_THROWS_AS(read_checkpoint(tail), CheckpointError);
  std::string v2 = bytes;
  v2[4] = 2;
  std::stringstream version(v2);
  CHECK_THROWS_AS(read_checkpoint(version), CheckpointError);
}

// --- evaluation -----------------------------------------------------------------------------

TEST_CASE("evaluation: self trials, caching, scores file and missing ids") {
  TempDir tmp("eval");
  const Dataset d = generate_synthetic_dataset(small_synth());
  const TrainResult r = train(small_train(), d);

  std::vector<TrialPair> self{{true, "spk005_u000", "spk005_u000"}, {false, "spk005_u000", "spk006_u000"}};
  const Evaluation s = evaluate(r.model, d, self);
  CHECK(s.scores[0].score == doctest::Approx(1.0).epsilon(1e-12));

  const auto trials = balanced_trials(d, "test", 4);
  EvalOptions cached, uncached;
  uncached.cache = false;
  const Evaluation a = evaluate(r.model, d, trials, cached);
  const Evaluation b = evaluate(r.model, d, trials, uncached);
  REQUIRE(a.scores.size() == trials.size());
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    CHECK(a.scores[i].score == b.scores[i].score);
    CHECK(a.scores[i].target == trials[i].target);
  }

  write_scores(tmp.path / "scores.txt", a.scores);
  const MetricsReport from_file = compute_metrics(read_scores(tmp.path / "scores.txt"));
  CHECK(from_file.eer == a.report.eer);
  CHECK(from_file.min_dcf == a.report.min_dcf);
  CHECK(from_file.format_key_values() == a.report.format_key_values());

  std::vector<TrialPair> missing = trials;
  missing.push_back({true, "ghost_1", "spk005_u000"});
  missing.push_back({false, "spk005_u001", "ghost_2"});
  try {
    evaluate(r.model, d, missing);
    FAIL("expected a resolution error");
  } catch (const ResolutionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("ghost_1") != std::string::npos);
    CHECK(msg.find("ghost_2") != std::string::npos);
  }
}

TEST_CASE("score-level fusion baseline") {
  const Dataset d = generate_synthetic_dataset(small_synth());
  const TrainResult ra = train(small_train(FusionMode::audio_only), d);
  const TrainResult rv = train(small_train(FusionMode::visual_only), d);
  const auto trials = balanced_trials(d, "test", 4);
  const Evaluation a = evaluate(ra.model, d, trials);
  const Evaluation v = evaluate(rv.model, d, trials);
  const Evaluation w1 = evaluate_score_fusion(ra.model, rv.model, d, trials, 1.0);
  const Evaluation half = evaluate_score_fusion(ra.model, rv.model, d, trials, 0.5);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    CHECK(w1.scores[i].score == a.scores[i].score);
    CHECK(half.scores[i].score == doctest::Approx(0.5 * a.scores[i].score + 0.5 * v.scores[i].score));
  }
}

// --- gradient suite and ablation ------------------------------------------------------------------

TEST_CASE("standard gradient suite passes and reports every layer") {
  const auto cases = standard_gradcheck_cases();
  const GradcheckReport report = run_gradcheck(cases);
  for (const auto& r : report.cases) {
    INFO(r.name << " " << r.worst_relative_error);
    CHECK(r.passed);
  }
  const std::string text = report.format();
  for (const char* layer : {"matmul", "tanh", "relu", "softmax_columns", "jca_step", "rjca_T3", "blstm_bptt", "asp",
                            "projection", "aam_loss"})
    CHECK(text.find(layer) != std::string::npos);
}

TEST_CASE("a corrupted backward pass fails the check") {
  Rng rng(4);
  GradCase c{"bad_square", {random_tensor({3, 2}, rng)}, [](Tape& tape, std::span<const Var> in) {
               Var x = in[0];
               Tensor y = x.value();
               for (double& v : y.values()) v *= v;
               // d(x^2)/dx is 2x; this records 3x
               Var sq = tape.record(std::move(y), {x}, [x](Tape& t, const Tensor& g) {
                 Tensor contrib = g;
                 for (std::size_t i = 0; i < contrib.size(); ++i) contrib(i) *= 3.0 * x.value()(i);
                 t.accumulate(x, contrib);
               }, "bad_square");
               return random_projection(sq, 3);
             }};
  const GradCaseResult r = check_case(c, 1e-5, 1e-4);
  CHECK_FALSE(r.passed);
  CHECK(r.worst_relative_error > 0.1);
  const std::vector<GradCase> all{c};
  CHECK_FALSE(run_gradcheck(all).passed());
}

TEST_CASE("iteration ablation report") {
  const Dataset d = generate_synthetic_dataset(small_synth());
  TrainConfig c = small_train();
  c.epochs = 1;
  const auto trials = balanced_trials(d, "test", 1);
  std::size_t calls = 0;
  const AblationReport rep =
      run_iteration_ablation(c, d, trials, {3, 1, 2}, true, [&](const AblationRow&) { ++calls; });
  REQUIRE(rep.rows.size() == 6);
  CHECK(calls == 6);
  CHECK(rep.rows[0].iterations == 1);
  CHECK(rep.rows[2].iterations == 3);
  CHECK(rep.rows[0].use_blstm);
  CHECK_FALSE(rep.rows[3].use_blstm);
  const std::string text = rep.format();
  CHECK(text.find("T=2 blstm=0 eer=") != std::string::npos);
  CHECK_THROWS_AS(run_iteration_ablation(c, d, trials, {}, false), ConfigError);
}
