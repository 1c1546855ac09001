#pragma once

#include <stdexcept>
#include <string>

namespace citgan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape, index, range).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Bad configuration: missing file, unknown key, malformed value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset rows that cannot be interpreted (unknown domain, bad header).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failure, e.g. a covariance with a clearly negative eigenvalue.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint file that is corrupt or written by another format version.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(long step, const std::string& what)
      : Error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

#define CITGAN_REQUIRE(cond, msg)                                  \
  do {                                                             \
    if (!(cond)) throw ::citgan::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace citgan
