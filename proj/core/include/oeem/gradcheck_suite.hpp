#ifndef OEEM_GRADCHECK_SUITE_HPP_
#define OEEM_GRADCHECK_SUITE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace oeem {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Finite-difference checks for every differentiable op and loss: conv2d,
// bilinear resize (up and down), average pooling, softmax, plain CE, each
// mining mode's weighted CE (weights frozen at the unperturbed logits), and
// both networks end to end. Inputs are random small shapes from `seed`.
std::vector<GradCheckResult> run_gradcheck_suite(double tolerance, double eps = 1e-5,
                                                 std::uint64_t seed = 2024);

}  // namespace oeem

#endif  // OEEM_GRADCHECK_SUITE_HPP_
