#pragma once

#include <stdexcept>
#include <string>

namespace cchedge {

/// Input violates a documented precondition (bad parameter, empty sample, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A computation produced a non-finite value or failed to converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical configuration cannot serve the request (grid too narrow, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed external data: CSV schema mismatch, unparsable dates.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cchedge
