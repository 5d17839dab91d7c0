#ifndef OEEM_PARAMS_HPP_
#define OEEM_PARAMS_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "oeem/tensor.hpp"

namespace oeem {

// Named parameter tensors with a parallel gradient tensor of the same shape.
// Networks keep the index returned by add() and address entries through it.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  std::size_t add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  std::size_t index_of(std::string_view name) const;

  Tensor& value(std::size_t i) { return entries_[i].value; }
  const Tensor& value(std::size_t i) const { return entries_[i].value; }
  Tensor& grad(std::size_t i) { return entries_[i].grad; }
  const Tensor& grad(std::size_t i) const { return entries_[i].grad; }
  const std::string& name(std::size_t i) const { return entries_[i].name; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  bool values_finite() const;

  // Values only; gradients are ignored.
  bool same_values(const ParamStore& other) const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace oeem

#endif  // OEEM_PARAMS_HPP_
