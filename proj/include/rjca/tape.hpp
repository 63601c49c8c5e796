#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "rjca/tensor.hpp"

namespace rjca {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records forward operations in execution order and replays them in exact
// reverse order to propagate gradients.
//
// Gradients are accumulated additively into every input that requires them;
// leaves created with parameter() require gradients, constants do not, and an
// op output requires a gradient iff any of its inputs does. A tape is
// single-threaded and must outlive every Var it hands out.
class Tape {
 public:
  // Receives the gradient of the recorded output and adds the contribution
  // for each input via accumulate()/grad_buffer().
  using Backward = std::function<void(Tape& tape, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  // Extension point for operations: appends `value` as the output of an op
  // over `inputs`. `op_name` is used in diagnostics.
  Var record(Tensor value, std::span<const Var> inputs, Backward backward, const char* op_name);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward,
             const char* op_name) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward), op_name);
  }

  // Reverse pass from a single-element output seeded with 1. Gradients are
  // reset first, so calling this twice yields identical results.
  void backward(Var output);
  void backward(Var output, const Tensor& seed);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  // Gradient after backward(); an empty tensor if the node needs none.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // For use inside Backward callbacks only.
  std::span<double> grad_buffer(Var v) { return nodes_[v.id()].grad.values(); }
  void accumulate(Var v, const Tensor& contribution);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // When enabled, every recorded op output is checked for NaN/Inf.
  static void set_debug_checks(bool enabled);
  static bool debug_checks();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool requires_grad = false;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);

  std::vector<Node> nodes_;
  Tensor empty_grad_;
};

}  // namespace rjca
