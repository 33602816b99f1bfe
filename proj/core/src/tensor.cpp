#include "tadkit/tensor.hpp"

#include <cmath>
#include <sstream>

#include "tadkit/errors.hpp"

namespace tadkit {

std::int64_t Tensor::shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string Tensor::shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values, bool requires_grad)
    : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
  if (shape_.size() > 4) throw DimensionError("tensor rank > 4: " + shape_str());
  for (int d : shape_) {
    if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str());
  }
  if (shape_size(shape_) != static_cast<std::int64_t>(values_.size())) {
    throw DimensionError("shape " + shape_str() + " does not match value count " +
                         std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in tensor construction");
  }
}

Tensor Tensor::raw(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.values_ = std::move(values);
  t.requires_grad_ = requires_grad;
  return t;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto n = shape_size(shape);
  return raw(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  auto n = shape_size(shape);
  Tensor t = raw(std::move(shape), std::vector<double>(static_cast<size_t>(n), value), requires_grad);
  if (!std::isfinite(value)) throw NumericError("non-finite fill value");
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

int Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str());
  }
  return shape_[static_cast<size_t>(axis)];
}

const std::vector<double>& Tensor::grad() const {
  if (grad_.empty()) throw ContractError("gradient requested but not populated");
  return grad_;
}

std::vector<double>& Tensor::ensure_grad() {
  if (grad_.empty()) grad_.assign(values_.size(), 0.0);
  return grad_;
}

void Tensor::zero_grad() {
  grad_.assign(values_.size(), 0.0);
}

double Tensor::at(std::initializer_list<int> idx) const {
  if (static_cast<int>(idx.size()) != rank()) {
    throw DimensionError("index rank mismatch for " + shape_str());
  }
  std::int64_t flat = 0;
  int axis = 0;
  for (int i : idx) {
    if (i < 0 || i >= shape_[static_cast<size_t>(axis)]) {
      throw DimensionError("index out of bounds for " + shape_str());
    }
    flat = flat * shape_[static_cast<size_t>(axis)] + i;
    ++axis;
  }
  return values_[static_cast<size_t>(flat)];
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace tadkit
