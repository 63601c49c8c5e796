#include "rjca/temporal.hpp"

#include <vector>

namespace rjca {

namespace {

Var put(Tape& tape, const Tensor& t, bool trainable) { return trainable ? tape.parameter(t) : tape.constant(t); }

void expect_shape(const Tensor& t, const Shape& expected, const std::string& name) {
  if (t.shape() != expected) {
    throw DimensionError("weight " + name + " has shape " + shape_string(t.shape()) + ", expected " +
                         shape_string(expected));
  }
}

LstmDirectionParams direction_zeros(std::size_t d, std::size_t h) {
  return {Tensor({4 * h, d}), Tensor({4 * h, h}), Tensor({4 * h})};
}

LstmDirectionParams direction_random(std::size_t d, std::size_t h, Rng& rng) {
  LstmDirectionParams p;
  p.input_weights = scaled_uniform({4 * h, d}, d, rng);
  p.recurrent_weights = scaled_uniform({4 * h, h}, h, rng);
  p.bias = Tensor({4 * h});
  for (std::size_t i = h; i < 2 * h; ++i) p.bias(i) = 1.0;
  return p;
}

// Runs one direction; `reverse` walks time from the end. Returns one h x 1
// state per input position, in input order.
std::vector<Var> run_direction(Var x, const LstmDirectionWeights& w, bool reverse) {
  Tape& tape = x.tape();
  const std::size_t h = w.recurrent_weights.value().cols();
  const std::size_t L = x.value().cols();
  Var gates_in = add_bias(matmul(w.input_weights, x), w.bias);
  Var state_h = tape.constant(Tensor({h, 1}));
  Var state_c = tape.constant(Tensor({h, 1}));
  std::vector<Var> outputs(L);
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t t = reverse ? L - 1 - step : step;
    Var z = add(column(gates_in, t), matmul(w.recurrent_weights, state_h));
    Var in_gate = sigmoid(slice_rows(z, 0, h));
    Var forget_gate = sigmoid(slice_rows(z, h, h));
    Var cell_in = tanh(slice_rows(z, 2 * h, h));
    Var out_gate = sigmoid(slice_rows(z, 3 * h, h));
    state_c = add(hadamard(forget_gate, state_c), hadamard(in_gate, cell_in));
    state_h = hadamard(out_gate, tanh(state_c));
    outputs[t] = state_h;
  }
  return outputs;
}

void check_direction(const Tensor& input_weights, const Tensor& recurrent_weights, const Tensor& bias,
                     std::size_t d, std::size_t h, const std::string& name) {
  expect_shape(input_weights, {4 * h, d}, name + ".input_weights");
  expect_shape(recurrent_weights, {4 * h, h}, name + ".recurrent_weights");
  expect_shape(bias, {4 * h}, name + ".bias");
}

}  // namespace

// --- BLSTM ------------------------------------------------------------------

BlstmParams BlstmParams::zeros(std::size_t d, std::size_t h) { return {direction_zeros(d, h), direction_zeros(d, h)}; }

BlstmParams BlstmParams::random(std::size_t d, std::size_t h, Rng& rng) {
  BlstmParams p;
  p.forward = direction_random(d, h, rng);
  p.backward = direction_random(d, h, rng);
  return p;
}

void BlstmParams::check_shapes(std::size_t d) const {
  const std::size_t h = hidden();
  if (h == 0) throw DimensionError("blstm: hidden size must be >= 1");
  check_direction(forward.input_weights, forward.recurrent_weights, forward.bias, d, h, "blstm.forward");
  check_direction(backward.input_weights, backward.recurrent_weights, backward.bias, d, h, "blstm.backward");
}

void BlstmParams::store(ParamStore& s, const std::string& prefix) const {
  s.set(prefix + "fwd.input_weights", forward.input_weights);
  s.set(prefix + "fwd.recurrent_weights", forward.recurrent_weights);
  s.set(prefix + "fwd.bias", forward.bias);
  s.set(prefix + "bwd.input_weights", backward.input_weights);
  s.set(prefix + "bwd.recurrent_weights", backward.recurrent_weights);
  s.set(prefix + "bwd.bias", backward.bias);
}

BlstmParams BlstmParams::load(const ParamStore& s, const std::string& prefix) {
  return {{s.get(prefix + "fwd.input_weights"), s.get(prefix + "fwd.recurrent_weights"), s.get(prefix + "fwd.bias")},
          {s.get(prefix + "bwd.input_weights"), s.get(prefix + "bwd.recurrent_weights"), s.get(prefix + "bwd.bias")}};
}

BlstmWeights BlstmWeights::bind(Tape& tape, const BlstmParams& p, bool trainable) {
  return {{put(tape, p.forward.input_weights, trainable), put(tape, p.forward.recurrent_weights, trainable),
           put(tape, p.forward.bias, trainable)},
          {put(tape, p.backward.input_weights, trainable), put(tape, p.backward.recurrent_weights, trainable),
           put(tape, p.backward.bias, trainable)}};
}

BlstmWeights BlstmWeights::from(const BoundParams& b, const std::string& prefix) {
  return {{b[prefix + "fwd.input_weights"], b[prefix + "fwd.recurrent_weights"], b[prefix + "fwd.bias"]},
          {b[prefix + "bwd.input_weights"], b[prefix + "bwd.recurrent_weights"], b[prefix + "bwd.bias"]}};
}

Var blstm_forward(Var x, const BlstmWeights& w) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || xv.cols() < 1) throw DimensionError("blstm_forward: expected d x L input with L >= 1");
  const std::size_t h = w.forward.recurrent_weights.value().cols();
  if (h == 0) throw DimensionError("blstm: hidden size must be >= 1");
  check_direction(w.forward.input_weights.value(), w.forward.recurrent_weights.value(), w.forward.bias.value(),
                  xv.rows(), h, "blstm.forward");
  check_direction(w.backward.input_weights.value(), w.backward.recurrent_weights.value(), w.backward.bias.value(),
                  xv.rows(), h, "blstm.backward");
  std::vector<Var> fwd = run_direction(x, w.forward, false);
  std::vector<Var> bwd = run_direction(x, w.backward, true);
  return concat_rows(concat_columns(fwd), concat_columns(bwd));
}

Tensor blstm_forward(const Tensor& x, const BlstmParams& params) {
  Tape tape;
  return blstm_forward(tape.constant(x), BlstmWeights::bind(tape, params, false)).value();
}

// --- attentive statistics pooling ---------------------------------------------

AspParams AspParams::zeros(std::size_t c, std::size_t a) { return {Tensor({a, c}), Tensor({a}), Tensor({a})}; }

AspParams AspParams::random(std::size_t c, std::size_t a, Rng& rng) {
  return {scaled_uniform({a, c}, c, rng), Tensor({a}), scaled_uniform({a}, a, rng)};
}

void AspParams::store(ParamStore& s, const std::string& prefix) const {
  s.set(prefix + "weight", weight);
  s.set(prefix + "bias", bias);
  s.set(prefix + "score", score);
}

AspParams AspParams::load(const ParamStore& s, const std::string& prefix) {
  return {s.get(prefix + "weight"), s.get(prefix + "bias"), s.get(prefix + "score")};
}

AspWeights AspWeights::bind(Tape& tape, const AspParams& p, bool trainable) {
  return {put(tape, p.weight, trainable), put(tape, p.bias, trainable), put(tape, p.score, trainable)};
}

AspWeights AspWeights::from(const BoundParams& b, const std::string& prefix) {
  return {b[prefix + "weight"], b[prefix + "bias"], b[prefix + "score"]};
}

AspOutput asp(Var frames, const AspWeights& w, double variance_floor) {
  const Tensor& hv = frames.value();
  if (hv.rank() != 2 || hv.cols() < 1) throw DimensionError("asp: expected c x L frames with L >= 1");
  const std::size_t c = hv.rows(), L = hv.cols();
  const std::size_t a = w.weight.value().rows();
  expect_shape(w.weight.value(), {a, c}, "asp.weight");
  expect_shape(w.bias.value(), {a}, "asp.bias");
  expect_shape(w.score.value(), {a}, "asp.score");

  Var hidden = tanh(add_bias(matmul(w.weight, frames), w.bias));   // a x L
  Var energies = reshape(matmul(transpose(hidden), w.score), {L, 1});
  Var alpha = softmax_columns(energies);                           // L x 1
  Var mean = matmul(frames, alpha);                                // c x 1
  Var second = matmul(hadamard(frames, frames), alpha);
  Var variance = sub(second, hadamard(mean, mean));
  Var stddev = sqrt(clamp_min(variance, variance_floor));
  Var pooled = reshape(concat_rows(mean, stddev), {2 * c});
  return {pooled, alpha};
}

Tensor asp(const Tensor& frames, const AspParams& params, double variance_floor) {
  Tape tape;
  return asp(tape.constant(frames), AspWeights::bind(tape, params, false), variance_floor).pooled.value();
}

// --- projection -------------------------------------------------------------

EmbeddingProjection EmbeddingProjection::random(std::size_t in, std::size_t e, Rng& rng, bool with_bias) {
  EmbeddingProjection p;
  p.weight = scaled_uniform({e, in}, in, rng);
  if (with_bias) p.bias = Tensor({e});
  return p;
}

void EmbeddingProjection::store(ParamStore& s, const std::string& prefix) const {
  s.set(prefix + "weight", weight);
  if (!bias.shape().empty()) s.set(prefix + "bias", bias);
}

EmbeddingProjection EmbeddingProjection::load(const ParamStore& s, const std::string& prefix) {
  EmbeddingProjection p;
  p.weight = s.get(prefix + "weight");
  if (s.contains(prefix + "bias")) p.bias = s.get(prefix + "bias");
  return p;
}

ProjectionWeights ProjectionWeights::bind(Tape& tape, const EmbeddingProjection& p, bool trainable) {
  ProjectionWeights w;
  w.weight = put(tape, p.weight, trainable);
  if (!p.bias.shape().empty()) w.bias = put(tape, p.bias, trainable);
  return w;
}

ProjectionWeights ProjectionWeights::from(const BoundParams& b, const std::string& prefix) {
  ProjectionWeights w;
  w.weight = b[prefix + "weight"];
  auto it = b.vars().find(prefix + "bias");
  if (it != b.vars().end()) w.bias = it->second;
  return w;
}

Var project_embedding(Var pooled, const ProjectionWeights& w) {
  const Tensor& x = pooled.value();
  const Tensor& W = w.weight.value();
  if (x.rank() != 1 || W.rank() != 2 || W.cols() != x.size()) {
    throw DimensionError("project_embedding: weight " + shape_string(W.shape()) + " cannot map input " +
                         shape_string(x.shape()));
  }
  if (W.rows() < 1) throw DimensionError("project_embedding: embedding dim must be >= 1");
  Var out = matmul(w.weight, pooled);
  if (w.bias.valid()) {
    expect_shape(w.bias.value(), {W.rows()}, "projection.bias");
    out = add(out, w.bias);
  }
  return out;
}

Tensor project_embedding(const Tensor& pooled, const EmbeddingProjection& params) {
  Tape tape;
  return project_embedding(tape.constant(pooled), ProjectionWeights::bind(tape, params, false)).value();
}

}  // namespace rjca
