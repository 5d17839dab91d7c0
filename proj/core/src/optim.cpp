#include "oeem/optim.hpp"

#include <cmath>

#include "oeem/errors.hpp"

namespace oeem {

double poly_lr(double base, std::size_t iter, std::size_t max_iter, double power) {
  if (max_iter == 0) return base;
  if (iter > max_iter) throw Error("poly_lr: iteration beyond schedule end");
  if (iter == max_iter) return 0.0;
  const double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(max_iter);
  return base * std::pow(frac, power);
}

Sgd::Sgd(const ParamStore& params, double momentum) : momentum_(momentum) {
  for (const auto& e : params.entries()) velocity_.emplace_back(e.value.shape());
}

void Sgd::step(ParamStore& params, double lr) {
  auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& v = velocity_[i];
    Tensor& w = entries[i].value;
    const Tensor& g = entries[i].grad;
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = momentum_ * v[k] + g[k];
      w[k] -= lr * v[k];
    }
  }
}

}  // namespace oeem
