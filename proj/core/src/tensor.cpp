#include "oeem/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "oeem/errors.hpp"

namespace oeem {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(shape_));
  }
  return shape_[axis];
}

std::span<double> Tensor::plane(std::size_t c) {
  const std::size_t n = shape_[1] * shape_[2];
  return std::span<double>(data_).subspan(c * n, n);
}

std::span<const double> Tensor::plane(std::size_t c) const {
  const std::size_t n = shape_[1] * shape_[2];
  return std::span<const double>(data_).subspan(c * n, n);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) {
    throw ShapeError("cannot add " + shape_string(other.shape_) + " to " +
                     shape_string(shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + shape_string(t.shape()));
  }
}

}  // namespace oeem
