#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rjca/tape.hpp"

namespace rjca {

// Central-difference estimate (f(x + eps) - f(x - eps)) / (2 eps) for every
// element of x. Throws NumericError if f returns a non-finite value.
Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps);

// ||a - b|| / max(||a||, ||b||); 0 when both norms are below 1e-12.
double relative_error(const Tensor& analytic, const Tensor& numeric);

// One finite-difference test case: `build` maps tape leaves for `inputs`
// (in order) to a single-element output.
struct GradCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<Var(Tape&, std::span<const Var>)> build;
};

struct GradCaseResult {
  std::string name;
  double worst_relative_error = 0.0;
  std::size_t worst_input = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradCaseResult> cases;
  double eps = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;

  bool passed() const;
  // One line per case: name, worst relative error, PASS/FAIL.
  std::string format() const;
};

GradCaseResult check_case(const GradCase& c, double eps, double tolerance);
GradcheckReport run_gradcheck(std::span<const GradCase> cases, double eps = 1e-5, double tolerance = 1e-4);

}  // namespace rjca
