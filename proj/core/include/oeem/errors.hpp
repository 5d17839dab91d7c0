#ifndef OEEM_ERRORS_HPP_
#define OEEM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace oeem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible extents, channel counts or ranks.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf during training, or a failed gradient check.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace oeem

#endif  // OEEM_ERRORS_HPP_
