#pragma once

#include <stdexcept>
#include <string>

namespace calib {

/// Bad argument values (dimension mismatches, out-of-range parameters,
/// malformed input files).
class InvalidInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A request that would exceed the dense-materialization limits.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested (loss, subspace) combination has no closed form / no support.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A bound's hypothesis does not hold for the given inputs.
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative numerical routine failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Score subspace is rank deficient where full column rank is required.
class SingularSubspaceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The surrogate is not consistent at the requested accuracy level.
class NotConsistentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace calib
