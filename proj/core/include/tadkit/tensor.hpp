#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tadkit {

// Dense float64 tensor, row-major, rank <= 4. Values are immutable after
// construction except through the gradient slot; compute ops return fresh
// tensors instead of mutating inputs. NaN/Inf are rejected at construction
// (checked paths); op kernels rely on finite inputs producing finite outputs.
class Tensor {
 public:
  Tensor() = default;
  // Checked: validates shape/value agreement and finiteness.
  Tensor(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // Unchecked fast path for op kernels: caller guarantees finite values.
  static Tensor raw(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
  int dim(int axis) const;

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool b) { requires_grad_ = b; }

  // Gradient slot. ensure_grad() allocates a zero-filled buffer if absent.
  bool has_grad() const { return !grad_.empty(); }
  const std::vector<double>& grad() const;
  std::vector<double>& ensure_grad();
  void zero_grad();
  void clear_grad() { grad_.clear(); }

  double at(std::initializer_list<int> idx) const;

  std::string shape_str() const;

  static std::int64_t shape_size(const std::vector<int>& shape);
  static std::string shape_to_string(const std::vector<int>& shape);

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

}  // namespace tadkit
