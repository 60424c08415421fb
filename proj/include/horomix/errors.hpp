#pragma once

#include <stdexcept>
#include <string>

namespace horomix {

// Error taxonomy shared by the library and the CLI. The CLI maps these
// onto exit codes: InputError/ConfigError -> 2, ResourceError -> 3,
// everything else -> 1.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed arguments: non-finite times, unsorted grids, bad shapes.
struct InputError : Error {
  using Error::Error;
};

// Parameters outside the regime an argument applies to (e.g. t2 <= 1).
struct OutOfRegimeError : InputError {
  using InputError::InputError;
};

// Configuration that cannot be honoured (parse failures, rejection floors).
struct ConfigError : Error {
  using Error::Error;
};

// Iteration, step or radius caps exceeded.
struct ResourceError : Error {
  using Error::Error;
};

// The mathematical model is violated (non-positive time-change generator).
struct ModelError : Error {
  using Error::Error;
};

// Internal consistency failure, e.g. a reduction that does not terminate.
struct DiagnosticError : Error {
  using Error::Error;
};

// Too few usable points for a fit.
struct InsufficientDataError : Error {
  using Error::Error;
};

}  // namespace horomix
