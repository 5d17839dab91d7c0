#ifndef OEEM_OPTIM_HPP_
#define OEEM_OPTIM_HPP_

#include <cstddef>
#include <vector>

#include "oeem/params.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Polynomial decay: base * (1 - iter / max_iter)^power.
// Returns `base` when max_iter is 0.
double poly_lr(double base, std::size_t iter, std::size_t max_iter, double power);

// Plain SGD with heavy-ball momentum (momentum = 0 gives vanilla SGD).
class Sgd {
 public:
  Sgd(const ParamStore& params, double momentum);
  void step(ParamStore& params, double lr);

 private:
  double momentum_;
  std::vector<Tensor> velocity_;
};

}  // namespace oeem

#endif  // OEEM_OPTIM_HPP_
