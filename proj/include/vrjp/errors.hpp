#pragma once

#include <stdexcept>
#include <string>

namespace vrjp {

// A factorization pivot fell below the relative floor. Raised by solves and by
// the sequential sampler; replicate runners count these instead of crashing.
class DegenerateError : public std::runtime_error {
public:
    DegenerateError(const std::string& what, int vertex = -1)
        : std::runtime_error(what), vertex_(vertex) {}
    int vertex() const noexcept { return vertex_; }

private:
    int vertex_;
};

// An exact identity failed beyond its tolerance.
class IdentityViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OracleInapplicable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vrjp
