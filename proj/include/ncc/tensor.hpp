#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncc {

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Row r of a rank-2 tensor.
  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * shape_[1], shape_[1]); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * shape_[1], shape_[1]);
  }

  void fill(double v);
  bool all_finite() const;

  /// Exact element-wise equality (shape and bit pattern of every value).
  bool bitwise_equal(const Tensor& other) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Gradient buffers aligned index-for-index with a ParameterSet.
using Gradients = std::vector<Tensor>;

/// Named trainable tensors in insertion order.
class ParameterSet {
 public:
  /// Adds a zero-initialized parameter and returns its index.
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  /// Index of the named parameter, or size() when absent.
  std::size_t index_of(std::string_view name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t num_scalars() const;

  Gradients zero_gradients() const;
  void zero_grad();

  /// Copies `grads` into each Parameter::grad.
  void set_grads(const Gradients& grads);

 private:
  std::vector<Parameter> params_;
};

void zero(Gradients& grads);

/// acc += other, element by element, in index order.
void accumulate(Gradients& acc, const Gradients& other);

}  // namespace ncc
