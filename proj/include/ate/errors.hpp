#ifndef ATE_ERRORS_HPP
#define ATE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ate {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Column-role mapping problems (unknown/missing columns, bad roles).
class SchemaError : public Error {
public:
    using Error::Error;
};

// Malformed cell contents; message carries the 1-based data row.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class SingularDesignError : public Error {
public:
    using Error::Error;
};

class SeparationError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ate

#endif
