#ifndef OEEM_GRADCHECK_HPP_
#define OEEM_GRADCHECK_HPP_

#include <functional>

#include "oeem/params.hpp"

namespace oeem {

// Scalar objective over a ParamStore. Each call must return the loss at the
// current parameter values and overwrite params' gradient tensors with the
// analytic gradient at that point.
using Objective = std::function<double(ParamStore&)>;

// Max over all parameter scalars of
//   |analytic - central_difference| / max(1, |central_difference|)
// with central differences taken at step `eps`. Parameter values are
// restored on return. Throws NumericError if the objective is non-finite.
double grad_check(const Objective& objective, ParamStore& params, double eps);

}  // namespace oeem

#endif  // OEEM_GRADCHECK_HPP_
