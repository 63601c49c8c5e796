#include "rjca/tape.hpp"

#include <atomic>

namespace rjca {

namespace {
std::atomic<bool> g_debug_checks{false};
}

const Tensor& Var::value() const { return tape_->value(*this); }
const Tensor& Var::grad() const { return tape_->grad(*this); }

void Tape::set_debug_checks(bool enabled) { g_debug_checks.store(enabled); }
bool Tape::debug_checks() { return g_debug_checks.load(); }

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backward), requires_grad});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward,
                 const char* op_name) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw InputError(std::string(op_name) + ": input from another tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  if (debug_checks()) value.check_finite(op_name);
  return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.grad.shape().empty() ? empty_grad_ : n.grad;
}

void Tape::accumulate(Var v, const Tensor& contribution) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  auto dst = n.grad.values();
  auto src = contribution.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var output) {
  if (value(output).size() != 1) {
    throw DimensionError("backward: output must be a single element, got " +
                         shape_string(value(output).shape()));
  }
  backward(output, Tensor::filled(value(output).shape(), 1.0));
}

void Tape::backward(Var output, const Tensor& seed) {
  if (!seed.same_shape(value(output))) throw DimensionError("backward: seed shape mismatch");
  for (std::size_t i = 0; i <= output.id(); ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) {
      n.grad = Tensor(n.value.shape());
    } else {
      n.grad = Tensor{};
    }
  }
  if (!nodes_[output.id()].requires_grad) return;
  nodes_[output.id()].grad = seed;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, n.grad);
  }
}

}  // namespace rjca
