#ifndef OEEM_TENSOR_HPP_
#define OEEM_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace oeem {

// Dense row-major array of doubles. Images, logits, CAMs and weight maps
// are all carried as Tensors; rank-3 tensors are laid out C x H x W.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor chw(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0) {
    return Tensor({c, h, w}, fill);
  }
  static Tensor hw(std::size_t h, std::size_t w, double fill = 0.0) {
    return Tensor({h, w}, fill);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Extents of a rank-3 (C,H,W) tensor.
  std::size_t channels() const { return dim(0); }
  std::size_t height() const { return dim(rank() - 2); }
  std::size_t width() const { return dim(rank() - 1); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  double& at(std::size_t h, std::size_t w) { return data_[h * shape_[1] + w]; }
  double at(std::size_t h, std::size_t w) const { return data_[h * shape_[1] + w]; }

  // One channel plane of a rank-3 tensor.
  std::span<double> plane(std::size_t c);
  std::span<const double> plane(std::size_t c) const;

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// Throws ShapeError unless `t` has the given rank.
void require_rank(const Tensor& t, std::size_t rank, const char* what);

}  // namespace oeem

#endif  // OEEM_TENSOR_HPP_
