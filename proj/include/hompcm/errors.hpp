#pragma once

#include <stdexcept>
#include <string>

namespace hompcm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad file contents, out-of-range parameters, violated
/// preconditions. The CLI maps these to exit code 2.
class ValidationError : public Error
{
  public:
    using Error::Error;
};

/// Higher diffraction orders propagate, so a 2x2 network is not defined.
class SingleModeViolation : public ValidationError
{
  public:
    using ValidationError::ValidationError;
};

/// Numerical failure inside a solver (eigen-decomposition, singular
/// interface system, passivity violated by a computed result). Exit code 3.
class SolverError : public Error
{
  public:
    using Error::Error;
};

}  // namespace hompcm
