#pragma once

#include <stdexcept>
#include <string>

namespace maslag {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid problem instance (non-convex polygon, duplicate points, A < 0, bad JSON).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Pointwise evaluation of the potential at a monopole point.
class SingularityError : public Error {
public:
    explicit SingularityError(const std::string& msg) : Error(msg) {}
};

/// A precondition on a geometric argument was violated.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Grid construction rejected the requested spacing.
class GridError : public Error {
public:
    explicit GridError(const std::string& msg) : Error(msg) {}
};

/// Solver failed to converge or produced a non-convex iterate.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

/// A diagnostic could not be computed from the available samples.
class DiagnosticError : public Error {
public:
    explicit DiagnosticError(const std::string& msg) : Error(msg) {}
};

} // namespace maslag
