#include "rjca/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rjca/checkpoint.hpp"

namespace rjca {

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad boolean '" + value + "' for " + key);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (optimizer != "adam" && optimizer != "momentum") {
    throw ConfigError("config: optimizer must be adam or momentum, got '" + optimizer + "'");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("config: learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("config: momentum must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
}

std::map<std::string, std::string> TrainConfig::to_key_values() const {
  const ModelConfig& m = model;
  return {
      {"aam_margin", format_real(m.aam_margin)},
      {"aam_scale", format_real(m.aam_scale)},
      {"audio_dim", std::to_string(m.audio_dim)},
      {"batch_size", std::to_string(batch_size)},
      {"bottleneck", std::to_string(m.bottleneck)},
      {"classes", std::to_string(m.classes)},
      {"data_dir", data_dir},
      {"embed_dim", std::to_string(m.embed_dim)},
      {"epochs", std::to_string(epochs)},
      {"fusion", to_string(m.fusion)},
      {"hidden", std::to_string(m.hidden)},
      {"iterations", std::to_string(m.iterations)},
      {"learning_rate", format_real(learning_rate)},
      {"momentum", format_real(momentum)},
      {"optimizer", optimizer},
      {"seed", std::to_string(seed)},
      {"segments", std::to_string(m.segments)},
      {"share_weights", m.share_weights ? "true" : "false"},
      {"use_blstm", m.use_blstm ? "true" : "false"},
      {"visual_dim", std::to_string(m.visual_dim)},
  };
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_key_values()) out += k + " = " + v + "\n";
  return out;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  ModelConfig& m = model;
  if (key == "aam_margin") m.aam_margin = parse_number<double>(key, value);
  else if (key == "aam_scale") m.aam_scale = parse_number<double>(key, value);
  else if (key == "audio_dim") m.audio_dim = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") batch_size = parse_number<std::size_t>(key, value);
  else if (key == "bottleneck") m.bottleneck = parse_number<std::size_t>(key, value);
  else if (key == "classes") m.classes = parse_number<std::size_t>(key, value);
  else if (key == "data_dir") data_dir = value;
  else if (key == "embed_dim") m.embed_dim = parse_number<std::size_t>(key, value);
  else if (key == "epochs") epochs = parse_number<std::size_t>(key, value);
  else if (key == "fusion") m.fusion = parse_fusion_mode(value);
  else if (key == "hidden") m.hidden = parse_number<std::size_t>(key, value);
  else if (key == "iterations") m.iterations = parse_number<std::size_t>(key, value);
  else if (key == "learning_rate") learning_rate = parse_number<double>(key, value);
  else if (key == "momentum") momentum = parse_number<double>(key, value);
  else if (key == "optimizer") optimizer = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "segments") m.segments = parse_number<std::size_t>(key, value);
  else if (key == "share_weights") m.share_weights = parse_bool(key, value);
  else if (key == "use_blstm") m.use_blstm = parse_bool(key, value);
  else if (key == "visual_dim") m.visual_dim = parse_number<std::size_t>(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

// --- optimizers -------------------------------------------------------------

void AdamOptimizer::step(ParamStore& params, const std::map<std::string, Tensor>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    Tensor& p = params.get(name);
    auto [mit, fresh_m] = m_.try_emplace(name, Tensor(p.shape()));
    auto [vit, fresh_v] = v_.try_emplace(name, Tensor(p.shape()));
    auto pv = p.values();
    auto mv = mit->second.values();
    auto vv = vit->second.values();
    auto gv = g.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = beta1_ * mv[i] + (1.0 - beta1_) * gv[i];
      vv[i] = beta2_ * vv[i] + (1.0 - beta2_) * gv[i] * gv[i];
      pv[i] -= lr_ * (mv[i] / c1) / (std::sqrt(vv[i] / c2) + eps_);
    }
  }
}

void MomentumOptimizer::step(ParamStore& params, const std::map<std::string, Tensor>& grads) {
  for (const auto& [name, g] : grads) {
    Tensor& p = params.get(name);
    auto [it, fresh] = velocity_.try_emplace(name, Tensor(p.shape()));
    auto pv = p.values();
    auto vel = it->second.values();
    auto gv = g.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      vel[i] = mu_ * vel[i] + gv[i];
      pv[i] -= lr_ * vel[i];
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& c) {
  if (c.optimizer == "adam") return std::make_unique<AdamOptimizer>(c.learning_rate);
  if (c.optimizer == "momentum") return std::make_unique<MomentumOptimizer>(c.learning_rate, c.momentum);
  throw ConfigError("config: unknown optimizer '" + c.optimizer + "'");
}

ParamStore quantize(const ParamStore& params) {
  ParamStore out = params;
  for (auto& [name, t] : out)
    for (double& v : t.values()) v = static_cast<float>(v);
  return out;
}

// --- training loop ----------------------------------------------------------

std::vector<std::string> training_speakers(const Dataset& data) { return data.speakers("train"); }

std::string format_loss_log(const std::vector<double>& losses) {
  std::string out;
  char buf[96];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "epoch %zu loss %.17g\n", i + 1, losses[i]);
    out += buf;
  }
  return out;
}

TrainResult train(TrainConfig config, const Dataset& data, const EpochCallback& on_epoch) {
  const std::vector<std::size_t> samples = data.split_indices("train");
  if (samples.empty()) throw InputError("train: dataset has no utterances in the train split");
  const std::vector<std::string> speakers = training_speakers(data);
  std::map<std::string, std::size_t> label_of;
  for (std::size_t i = 0; i < speakers.size(); ++i) label_of[speakers[i]] = i;

  config.model.audio_dim = data.audio_dim();
  config.model.visual_dim = data.visual_dim();
  config.model.segments = data.segments();
  config.model.classes = speakers.size();
  config.validate();

  Model model = Model::init(config.model, config.seed);
  std::unique_ptr<Optimizer> opt = make_optimizer(config);
  Rng shuffle_rng(config.seed + 1);

  const std::filesystem::path out_dir = config.out_dir;
  if (!config.out_dir.empty()) std::filesystem::create_directories(out_dir);

  std::vector<double> epoch_losses;
  std::vector<std::size_t> order(samples.size());
  std::vector<double> sample_loss(samples.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      Tape tape;
      BoundParams bound(tape, model.params(), true);
      std::vector<Var> terms;
      try {
        for (std::size_t k = start; k < stop; ++k) {
          const Utterance& u = data.utterances()[samples[order[k]]];
          Var l = model.loss(bound, tape.constant(u.audio), tape.constant(u.visual), label_of.at(u.speaker));
          sample_loss[order[k]] = l.value()(0);
          terms.push_back(l);
        }
      } catch (const NumericError& e) {
        throw TrainingDiverged("train: epoch " + std::to_string(epoch) + ", batch at " + std::to_string(start) +
                               ": " + e.what());
      }
      Var total = terms.front();
      for (std::size_t k = 1; k < terms.size(); ++k) total = add(total, terms[k]);
      total = scale(total, inv_batch);
      if (!std::isfinite(total.value()(0))) {
        throw TrainingDiverged("train: non-finite loss in epoch " + std::to_string(epoch) + ", batch at " +
                               std::to_string(start) + " (try a lower learning_rate)");
      }
      tape.backward(total);
      std::map<std::string, Tensor> grads;
      for (const auto& [name, var] : bound.vars()) {
        const Tensor& g = var.grad();
        for (double v : g.values()) {
          if (!std::isfinite(v)) {
            throw TrainingDiverged("train: non-finite gradient for '" + name + "' in epoch " +
                                   std::to_string(epoch));
          }
        }
        grads.emplace(name, g);
      }
      opt->step(model.params(), grads);
    }
    double total = 0.0;
    for (double l : sample_loss) total += l;
    epoch_losses.push_back(total / static_cast<double>(sample_loss.size()));
    if (!config.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03zu.rjck", epoch);
      save_checkpoint({config, quantize(model.params())}, out_dir / name);
    }
    if (on_epoch) on_epoch(epoch, epoch_losses.back());
  }

  Model final_model(config.model, quantize(model.params()));
  if (!config.out_dir.empty()) {
    save_checkpoint({config, final_model.params()}, out_dir / "final.rjck");
    std::ofstream log(out_dir / "loss.log");
    log << format_loss_log(epoch_losses);
  }
  return {std::move(final_model), std::move(epoch_losses), std::move(config)};
}

}  // namespace rjca
