#include "oeem/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oeem/errors.hpp"

namespace oeem {

namespace {

double checked(double v, const char* where) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss during ") + where);
  return v;
}

}  // namespace

double grad_check(const Objective& objective, ParamStore& params, double eps) {
  if (!(eps > 0.0)) throw Error("grad_check: eps must be positive");
  params.zero_grad();
  checked(objective(params), "analytic pass");
  std::vector<Tensor> analytic;
  for (const auto& e : params.entries()) analytic.push_back(e.grad);

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params.value(i).size(); ++k) {
      const double saved = params.value(i)[k];
      params.value(i)[k] = saved + eps;
      const double up = checked(objective(params), "finite difference");
      params.value(i)[k] = saved - eps;
      const double down = checked(objective(params), "finite difference");
      params.value(i)[k] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double err = std::abs(analytic[i][k] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params.grad(i) = analytic[i];
  return worst;
}

}  // namespace oeem
