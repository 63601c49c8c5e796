#include "rjca/gradcheck_suite.hpp"

#include "rjca/fusion.hpp"
#include "rjca/model.hpp"
#include "rjca/objective.hpp"
#include "rjca/random.hpp"
#include "rjca/temporal.hpp"

namespace rjca {

Var random_projection(Var out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor weights = uniform_tensor(out.value().shape(), -1.0, 1.0, rng);
  return sum(hadamard(out, out.tape().constant(std::move(weights))));
}

namespace {

Tensor draw(Shape shape, Rng& rng) { return uniform_tensor(std::move(shape), -1.0, 1.0, rng); }

void push_jca(std::vector<Tensor>& inputs, const JcaIterationParams& p) {
  for (const Tensor* w : {&p.joint_audio, &p.joint_visual, &p.corr_audio, &p.corr_visual, &p.attend_audio,
                          &p.attend_visual})
    inputs.push_back(*w);
}

JcaWeights jca_from(std::span<const Var> w) { return {w[0], w[1], w[2], w[3], w[4], w[5]}; }

GradCase unary(const char* name, Rng& rng, Var (*op)(Var)) {
  return {name, {draw({4, 5}, rng)}, [op](Tape&, std::span<const Var> in) { return random_projection(op(in[0]), 11); }};
}

}  // namespace

std::vector<GradCase> standard_gradcheck_cases(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCase> cases;

  cases.push_back({"matmul", {draw({3, 4}, rng), draw({4, 5}, rng)},
                   [](Tape&, std::span<const Var> in) { return random_projection(matmul(in[0], in[1]), 11); }});
  cases.push_back(unary("tanh", rng, [](Var x) { return tanh(x); }));
  cases.push_back(unary("relu", rng, [](Var x) { return relu(x); }));
  cases.push_back(unary("sigmoid", rng, [](Var x) { return sigmoid(x); }));
  cases.push_back(unary("softmax_columns", rng, [](Var x) { return softmax_columns(x); }));
  cases.push_back({"concat_rows", {draw({2, 4}, rng), draw({3, 4}, rng)},
                   [](Tape&, std::span<const Var> in) { return random_projection(concat_rows(in[0], in[1]), 11); }});

  {
    GradCase c{"jca_step", {draw({3, 4}, rng), draw({2, 4}, rng)}, {}};
    push_jca(c.inputs, JcaIterationParams::random(3, 2, 4, rng));
    c.build = [](Tape&, std::span<const Var> in) {
      return random_projection(jca_step(in[0], in[1], jca_from(in.subspan(2))).concatenated, 12);
    };
    cases.push_back(std::move(c));
  }
  {
    GradCase c{"rjca_T3", {draw({3, 4}, rng), draw({2, 4}, rng)}, {}};
    for (int t = 0; t < 3; ++t) push_jca(c.inputs, JcaIterationParams::random(3, 2, 4, rng));
    c.build = [](Tape&, std::span<const Var> in) {
      std::vector<JcaWeights> passes;
      for (std::size_t t = 0; t < 3; ++t) passes.push_back(jca_from(in.subspan(2 + 6 * t)));
      return random_projection(rjca_forward(in[0], in[1], passes).concatenated, 13);
    };
    cases.push_back(std::move(c));
  }
  {
    CrossAttentionParams p = CrossAttentionParams::random(3, 2, 4, rng);
    cases.push_back({"cross_attention",
                     {draw({3, 4}, rng), draw({2, 4}, rng), p.cross_audio, p.cross_visual, p.corr_audio,
                      p.corr_visual, p.attend_audio, p.attend_visual},
                     [](Tape&, std::span<const Var> in) {
                       CrossAttentionWeights w{in[2], in[3], in[4], in[5], in[6], in[7]};
                       return random_projection(cross_attention_step(in[0], in[1], w).concatenated, 14);
                     }});
  }
  {
    BlstmParams p = BlstmParams::random(3, 4, rng);
    cases.push_back({"blstm_bptt",
                     {draw({3, 6}, rng), p.forward.input_weights, p.forward.recurrent_weights, p.forward.bias,
                      p.backward.input_weights, p.backward.recurrent_weights, p.backward.bias},
                     [](Tape&, std::span<const Var> in) {
                       BlstmWeights w{{in[1], in[2], in[3]}, {in[4], in[5], in[6]}};
                       return random_projection(blstm_forward(in[0], w), 15);
                     }});
  }
  {
    AspParams p = AspParams::random(4, 3, rng);
    cases.push_back({"asp", {draw({4, 5}, rng), p.weight, draw({3}, rng), p.score},
                     [](Tape&, std::span<const Var> in) {
                       return random_projection(asp(in[0], {in[1], in[2], in[3]}).pooled, 16);
                     }});
  }
  {
    EmbeddingProjection p = EmbeddingProjection::random(8, 4, rng);
    cases.push_back({"projection", {draw({8}, rng), p.weight, draw({4}, rng)},
                     [](Tape&, std::span<const Var> in) {
                       return random_projection(project_embedding(in[0], {in[1], in[2]}), 17);
                     }});
  }
  cases.push_back({"aam_loss", {draw({6}, rng), draw({4, 6}, rng)}, [](Tape&, std::span<const Var> in) {
                     return aam_loss(in[0], in[1], 1, kDefaultAamScale, kDefaultAamMargin);
                   }});
  {
    ModelConfig mc;
    mc.audio_dim = 3;
    mc.visual_dim = 2;
    mc.segments = 4;
    mc.iterations = 2;
    mc.hidden = 3;
    mc.bottleneck = 3;
    mc.embed_dim = 4;
    mc.classes = 3;
    mc.aam_scale = 5.0;
    const Model model = Model::init(mc, rng());
    GradCase c{"model_loss", {draw({3, 4}, rng), draw({2, 4}, rng)}, {}};
    std::vector<std::string> names;
    for (const auto& [name, t] : model.params()) {
      names.push_back(name);
      c.inputs.push_back(t);
    }
    c.build = [model, names](Tape&, std::span<const Var> in) {
      std::map<std::string, Var> vars;
      for (std::size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], in[2 + i]);
      return model.loss(BoundParams(std::move(vars)), in[0], in[1], 2);
    };
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace rjca
