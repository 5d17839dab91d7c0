#include "oeem/params.hpp"

#include "oeem/errors.hpp"

namespace oeem {

std::size_t ParamStore::add(std::string name, std::vector<std::size_t> shape) {
  for (const auto& e : entries_) {
    if (e.name == name) throw Error("duplicate parameter name: " + name);
  }
  Tensor value(shape);
  Tensor grad(std::move(shape));
  entries_.push_back({std::move(name), std::move(value), std::move(grad)});
  return entries_.size() - 1;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::size_t ParamStore::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw Error("no parameter named " + std::string(name));
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

bool ParamStore::values_finite() const {
  for (const auto& e : entries_) {
    if (!e.value.all_finite()) return false;
  }
  return true;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!(entries_[i].value == other.entries_[i].value)) return false;
  }
  return true;
}

}  // namespace oeem
