#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rjca/dataset.hpp"
#include "rjca/model.hpp"

namespace rjca {

struct TrainConfig {
  ModelConfig model;
  std::string optimizer = "adam";  // adam | momentum
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  std::string data_dir;
  std::string out_dir;

  void validate() const;

  // Flat `key = value` text, keys sorted, reals printed with %.17g so the
  // text round-trips exactly. out_dir is not part of the snapshot.
  std::map<std::string, std::string> to_key_values() const;
  std::string to_text() const;
  // Unknown keys and unparsable values throw ConfigError.
  void set(const std::string& key, const std::string& value);
  static TrainConfig from_text(const std::string& text);
};

// Divergence during training: non-finite loss or gradient.
class TrainingDiverged : public NumericError {
 public:
  using NumericError::NumericError;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParamStore& params, const std::map<std::string, Tensor>& grads) = 0;
};

// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.
class AdamOptimizer : public Optimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamStore& params, const std::map<std::string, Tensor>& grads) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

// v = mu v + g; p -= lr v.
class MomentumOptimizer : public Optimizer {
 public:
  MomentumOptimizer(double lr, double mu) : lr_(lr), mu_(mu) {}
  void step(ParamStore& params, const std::map<std::string, Tensor>& grads) override;

 private:
  double lr_, mu_;
  std::map<std::string, Tensor> velocity_;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& config);

// Parameters rounded through single precision, as stored in a checkpoint.
ParamStore quantize(const ParamStore& params);

struct TrainResult {
  Model model;
  std::vector<double> epoch_losses;  // mean AAM loss per epoch
  TrainConfig config;                // with dims and classes filled in from the data
};

// Sorted training speakers; a speaker's index is its class label.
std::vector<std::string> training_speakers(const Dataset& data);

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Mini-batch training on the "train" split. Feature dims, L and the class
// count are taken from the data. When config.out_dir is set, writes
// epoch_NNN.rjck after every epoch, final.rjck and loss.log. The returned
// model is quantized exactly like final.rjck.
TrainResult train(TrainConfig config, const Dataset& data, const EpochCallback& on_epoch = {});

std::string format_loss_log(const std::vector<double>& epoch_losses);

}  // namespace rjca
