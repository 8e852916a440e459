#ifndef HGCN_ERROR_HPP
#define HGCN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hgcn {

/// Operand shapes are incompatible for the requested operation.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data or configuration failed validation (maps to CLI exit code 1).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be read, written or decoded (maps to CLI exit code 2).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric operation received or would produce a NaN/Inf.
class NumericError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace hgcn

#endif // HGCN_ERROR_HPP
