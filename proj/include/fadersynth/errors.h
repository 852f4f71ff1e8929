#ifndef FADERSYNTH_ERRORS_H_
#define FADERSYNTH_ERRORS_H_

#include <stdexcept>
#include <string>

namespace fadersynth {

// Invalid parameter combination (band count, hop, unknown descriptor, ...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Input shorter than an operation requires.
class LengthError : public std::length_error {
 public:
  explicit LengthError(const std::string& what) : std::length_error(what) {}
};

// Mismatched matrix or tensor dimensions.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// NaN/Inf encountered in activations or losses.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Not enough distinct values to place the requested quantile bins.
class DegenerateDistributionError : public std::runtime_error {
 public:
  explicit DegenerateDistributionError(const std::string& what)
      : std::runtime_error(what) {}
};

// A frozen-parameter or stage-ordering contract was broken during training.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// File could not be read, decoded or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fadersynth

#endif  // FADERSYNTH_ERRORS_H_
