#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "rjca/errors.hpp"

namespace rjca {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major real tensor of rank 1..3 (double precision).
//
// Rank-1 tensors of extent n behave as n x 1 column vectors wherever a
// matrix view is needed (rows() == n, cols() == 1). Extents may be zero so
// that empty blocks can take part in concatenation; every stored value is
// finite.
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled tensor.
  explicit Tensor(Shape shape);

  // Takes ownership of `data`; rejects a size mismatch or any NaN/Inf.
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, double value);
  static Tensor identity(std::size_t n);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() >= 2 ? shape_[1] : 1; }

  double& operator()(std::size_t i) { return data_[i]; }
  double operator()(std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Throws NumericError naming `context` if any value is NaN/Inf.
  void check_finite(const std::string& context) const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);

// Frobenius norm.
double norm(const Tensor& t);

// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

// Plain matrix kernels on tensors (no gradient tracking). Rank-1 operands
// are treated as column vectors; the result of matmul keeps the rank of `b`.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Row-major accumulate kernels shared by the autodiff layer:
//   c += a * b, c += a^T * b, c += a * b^T  (m x n result)
void gemm_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
              std::size_t m, std::size_t k, std::size_t n);
void gemm_tn_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t k, std::size_t n);
void gemm_nt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t k, std::size_t n);

}  // namespace rjca
