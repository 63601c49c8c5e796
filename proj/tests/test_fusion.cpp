#include "doctest.h"

#include <cmath>
#include <variant>

#include "rjca/fusion.hpp"
#include "rjca/gradcheck.hpp"
#include "test_support.hpp"

using namespace rjca;
using rjca::testing::project_to_scalar;
using rjca::testing::random_tensor;

namespace {

std::vector<JcaIterationParams> random_passes(std::size_t T, std::size_t da, std::size_t dv, std::size_t L, Rng& rng) {
  std::vector<JcaIterationParams> passes;
  for (std::size_t t = 0; t < T; ++t) passes.push_back(JcaIterationParams::random(da, dv, L, rng));
  return passes;
}

}  // namespace

TEST_CASE("joint representation") {
  Rng rng(1);
  Tensor xa = random_tensor({2, 4}, rng);
  Tensor xv({3, 4});
  Tensor j = joint_representation(xa, xv);
  CHECK(j.shape() == Shape{5, 4});
  for (std::size_t r = 2; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(j(r, c) == 0.0);
  CHECK(joint_representation(Tensor::matrix({{1}}), Tensor::matrix({{1}})) == Tensor::matrix({{1}, {1}}));
  CHECK_THROWS_AS(joint_representation(xa, Tensor({3, 5})), DimensionError);
}

TEST_CASE("jca_step with zero weights is the identity") {
  Rng rng(2);
  Tensor xa = random_tensor({2, 4}, rng, -3, 3);
  Tensor xv = random_tensor({3, 4}, rng, -3, 3);
  FusedFeatures out = jca_step(xa, xv, JcaIterationParams::zeros(2, 3, 4));
  CHECK(out.audio == xa);
  CHECK(out.visual == xv);
  CHECK(out.concatenated == joint_representation(xa, xv));
}

TEST_CASE("jca_step shape contract") {
  Rng rng(3);
  Tape tape;
  Var xa = tape.constant(random_tensor({2, 4}, rng));
  Var xv = tape.constant(random_tensor({3, 4}, rng));
  FusedVars out = jca_step(xa, xv, JcaWeights::bind(tape, JcaIterationParams::random(2, 3, 4, rng), false));
  CHECK(out.corr_audio.shape() == Shape{4, 4});
  CHECK(out.corr_visual.shape() == Shape{4, 4});
  CHECK(out.audio.shape() == Shape{2, 4});
  CHECK(out.visual.shape() == Shape{3, 4});
  CHECK(out.concatenated.shape() == Shape{5, 4});
}

TEST_CASE("jca_step scalar hand evaluation") {
  // d_a = d_v = L = 1, every input and weight 1:
  //   X_a^T W_ja J = 1 * [1 1] * [1;1] = 2, scaled by 1/sqrt(2)
  const double corr = std::tanh(2.0 / std::sqrt(2.0));
  CHECK(corr == doctest::Approx(0.88839).epsilon(1e-5));
  JcaIterationParams ones{Tensor::matrix({{1, 1}}), Tensor::matrix({{1, 1}}), Tensor::matrix({{1}}),
                          Tensor::matrix({{1}}),    Tensor::matrix({{1}}),    Tensor::matrix({{1}})};
  FusedFeatures out = jca_step(Tensor::matrix({{1}}), Tensor::matrix({{1}}), ones);
  CHECK(out.audio(0) == doctest::Approx(1.0 + corr).epsilon(1e-14));
  CHECK(out.visual(0) == doctest::Approx(1.0 + corr).epsilon(1e-14));
  CHECK(out.audio(0) == doctest::Approx(1.88839).epsilon(1e-5));
}

TEST_CASE("jca_step names the offending weight") {
  Rng rng(4);
  JcaIterationParams p = JcaIterationParams::random(2, 3, 4, rng);
  p.attend_visual = Tensor({4, 3});
  try {
    jca_step(random_tensor({2, 4}, rng), random_tensor({3, 4}, rng), p);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("attend_visual") != std::string::npos);
  }
  CHECK_THROWS_AS(jca_step(random_tensor({2, 4}, rng), random_tensor({3, 5}, rng), JcaIterationParams::zeros(2, 3, 4)),
                  DimensionError);
}

TEST_CASE("rjca_forward recursion") {
  Rng rng(5);
  Tensor xa = random_tensor({2, 4}, rng);
  Tensor xv = random_tensor({3, 4}, rng);
  auto passes = random_passes(3, 2, 3, 4, rng);

  SUBCASE("T = 1 equals one jca_step bitwise") {
    FusedFeatures one = rjca_forward(xa, xv, std::span(passes).first(1));
    FusedFeatures step = jca_step(xa, xv, passes[0]);
    CHECK(one.audio == step.audio);
    CHECK(one.visual == step.visual);
    CHECK(one.concatenated == step.concatenated);
  }
  SUBCASE("each pass consumes the previous attended features") {
    FusedFeatures manual = jca_step(xa, xv, passes[0]);
    manual = jca_step(manual.audio, manual.visual, passes[1]);
    manual = jca_step(manual.audio, manual.visual, passes[2]);
    FusedFeatures rec = rjca_forward(xa, xv, passes);
    CHECK(rec.audio == manual.audio);
    CHECK(rec.visual == manual.visual);
  }
  SUBCASE("zero weights telescope to identity for any T") {
    for (std::size_t T = 1; T <= 5; ++T) {
      std::vector<JcaIterationParams> zeros(T, JcaIterationParams::zeros(2, 3, 4));
      FusedFeatures out = rjca_forward(xa, xv, zeros);
      CHECK(out.audio == xa);
      CHECK(out.visual == xv);
    }
  }
  SUBCASE("empty parameter list") {
    CHECK_THROWS_AS(rjca_forward(xa, xv, std::span<const JcaIterationParams>{}), ConfigError);
  }
}

TEST_CASE("correlation entries lie strictly inside (-1, 1)") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Tape tape;
    Var xa = tape.constant(random_tensor({3, 5}, rng, -2, 2));
    Var xv = tape.constant(random_tensor({4, 5}, rng, -2, 2));
    FusedVars out = jca_step(xa, xv, JcaWeights::bind(tape, JcaIterationParams::random(3, 4, 5, rng), false));
    for (double c : out.corr_audio.value().values()) CHECK(std::abs(c) < 1.0);
    for (double c : out.corr_visual.value().values()) CHECK(std::abs(c) < 1.0);
    CHECK(out.audio.shape() == Shape{3, 5});
    CHECK(out.visual.shape() == Shape{4, 5});
  }
}

TEST_CASE("rjca gradients match finite differences for T up to 4") {
  for (std::size_t T = 1; T <= 4; ++T) {
    Rng rng(100 + T);
    GradCase c;
    c.name = "rjca_T" + std::to_string(T);
    c.inputs = {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)};
    for (std::size_t t = 0; t < T; ++t) {
      JcaIterationParams p = JcaIterationParams::random(2, 2, 3, rng);
      for (Tensor* w : {&p.joint_audio, &p.joint_visual, &p.corr_audio, &p.corr_visual, &p.attend_audio,
                        &p.attend_visual})
        c.inputs.push_back(*w);
    }
    c.build = [T](Tape&, std::span<const Var> in) {
      std::vector<JcaWeights> passes;
      for (std::size_t t = 0; t < T; ++t) {
        const auto* w = &in[2 + 6 * t];
        passes.push_back({w[0], w[1], w[2], w[3], w[4], w[5]});
      }
      return project_to_scalar(rjca_forward(in[0], in[1], passes).concatenated);
    };
    const GradCaseResult r = check_case(c, 1e-5, 1e-4);
    INFO(c.name << " worst " << r.worst_relative_error << " at input " << r.worst_input);
    CHECK(r.passed);
  }
}

TEST_CASE("baseline fusion modes") {
  Rng rng(7);
  Tensor xa = random_tensor({2, 4}, rng);
  Tensor xv = random_tensor({3, 4}, rng);

  BaselineInputs in;
  in.audio_score = 0.37;
  in.visual_score = -0.2;
  in.audio_weight = 1.0;
  CHECK(std::get<double>(baseline_fuse(BaselineMode::score_level, in)) == 0.37);
  in.audio_weight = 0.25;
  CHECK(std::get<double>(baseline_fuse(BaselineMode::score_level, in)) == doctest::Approx(0.25 * 0.37 - 0.75 * 0.2));

  in.audio = xa;
  in.visual = xv;
  CHECK(std::get<FusedFeatures>(baseline_fuse(BaselineMode::concat, in)).concatenated.shape() == Shape{5, 4});

  CHECK_THROWS_AS(baseline_fuse(BaselineMode::cross_attention, in), ConfigError);
  CrossAttentionParams zeros = CrossAttentionParams::zeros(2, 3, 4);
  in.cross = &zeros;
  FusedFeatures ca = std::get<FusedFeatures>(baseline_fuse(BaselineMode::cross_attention, in));
  CHECK(ca.audio == xa);
  CHECK(ca.visual == xv);

  CHECK(parse_baseline_mode("concat") == BaselineMode::concat);
  CHECK_THROWS_AS(parse_baseline_mode("self_attention"), ConfigError);
}

TEST_CASE("cross attention gradients") {
  Rng rng(8);
  CrossAttentionParams p = CrossAttentionParams::random(2, 3, 4, rng);
  GradCase c{"cross_attention",
             {random_tensor({2, 4}, rng), random_tensor({3, 4}, rng), p.cross_audio, p.cross_visual, p.corr_audio,
              p.corr_visual, p.attend_audio, p.attend_visual},
             [](Tape&, std::span<const Var> in) {
               CrossAttentionWeights w{in[2], in[3], in[4], in[5], in[6], in[7]};
               return project_to_scalar(cross_attention_step(in[0], in[1], w).concatenated);
             }};
  CHECK(check_case(c, 1e-5, 1e-4).passed);
}
