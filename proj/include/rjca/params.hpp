#pragma once

#include <map>
#include <string>
#include <vector>

#include "rjca/tape.hpp"

namespace rjca {

// Named collection of learnable tensors, ordered by name.
class ParamStore {
 public:
  void set(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }

  bool operator==(const ParamStore& other) const = default;

 private:
  std::map<std::string, Tensor> tensors_;
};

// A ParamStore placed on a tape, either as gradient-tracked leaves or as
// constants.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamStore& store, bool trainable);
  explicit BoundParams(std::map<std::string, Var> vars) : vars_(std::move(vars)) {}

  Var operator[](const std::string& name) const;
  const std::map<std::string, Var>& vars() const { return vars_; }

 private:
  std::map<std::string, Var> vars_;
};

}  // namespace rjca
