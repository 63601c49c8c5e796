#include "rjca/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rjca {

Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("numeric_gradient: eps must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe(i);
    probe(i) = orig + eps;
    const double up = f(probe);
    probe(i) = orig - eps;
    const double down = f(probe);
    probe(i) = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("numeric_gradient: non-finite function value at element " + std::to_string(i));
    }
    grad(i) = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(const Tensor& analytic, const Tensor& numeric) {
  if (!analytic.same_shape(numeric)) throw DimensionError("relative_error: shape mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic(i) - numeric(i);
    diff += d * d;
  }
  const double scale = std::max(norm(analytic), norm(numeric));
  if (scale < 1e-12) return 0.0;
  return std::sqrt(diff) / scale;
}

GradCaseResult check_case(const GradCase& c, double eps, double tolerance) {
  GradCaseResult result;
  result.name = c.name;

  Tape tape;
  std::vector<Var> leaves;
  for (const Tensor& in : c.inputs) leaves.push_back(tape.parameter(in));
  Var out = c.build(tape, leaves);
  tape.backward(out);

  for (std::size_t k = 0; k < c.inputs.size(); ++k) {
    auto f = [&](const Tensor& probe) {
      Tape local;
      std::vector<Var> vars;
      for (std::size_t j = 0; j < c.inputs.size(); ++j)
        vars.push_back(local.constant(j == k ? probe : c.inputs[j]));
      return c.build(local, vars).value()(0);
    };
    const Tensor numeric = numeric_gradient(f, c.inputs[k], eps);
    const double err = relative_error(leaves[k].grad(), numeric);
    if (k == 0 || err > result.worst_relative_error) {
      result.worst_relative_error = err;
      result.worst_input = k;
    }
  }
  result.passed = result.worst_relative_error < tolerance;
  return result;
}

bool GradcheckReport::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const GradCaseResult& r) { return r.passed; });
}

std::string GradcheckReport::format() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-14s %s\n", "layer", "worst_rel_err", "status");
  os << line;
  for (const auto& r : cases) {
    std::snprintf(line, sizeof line, "%-28s %-14.3e %s\n", r.name.c_str(), r.worst_relative_error,
                  r.passed ? "PASS" : "FAIL");
    os << line;
  }
  std::snprintf(line, sizeof line, "eps=%.1e tolerance=%.1e elapsed=%.2fs result=%s\n", eps, tolerance,
                seconds, passed() ? "PASS" : "FAIL");
  os << line;
  return os.str();
}

GradcheckReport run_gradcheck(std::span<const GradCase> cases, double eps, double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  GradcheckReport report;
  report.eps = eps;
  report.tolerance = tolerance;
  for (const auto& c : cases) report.cases.push_back(check_case(c, eps, tolerance));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace rjca
