#include "rjca/params.hpp"

namespace rjca {

void ParamStore::set(const std::string& name, Tensor value) { tensors_[name] = std::move(value); }

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw InputError("parameter '" + name + "' not found");
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw InputError("parameter '" + name + "' not found");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

BoundParams::BoundParams(Tape& tape, const ParamStore& store, bool trainable) {
  for (const auto& [name, t] : store) vars_.emplace(name, trainable ? tape.parameter(t) : tape.constant(t));
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw InputError("parameter '" + name + "' not bound");
  return it->second;
}

}  // namespace rjca
