#pragma once

#include <stdexcept>
#include <string>

namespace rattle {

/// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
    Validation,           // bad input or violated precondition
    Numerical,            // solver / quadrature / tolerance failure
    BoundaryContamination // truncated window too small for the horizon
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Short machine-readable name, e.g. "InconsistentInitialData".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error validation_error(std::string code, const std::string& what) {
    return Error(ErrorKind::Validation, std::move(code), what);
}

inline Error numerical_error(std::string code, const std::string& what) {
    return Error(ErrorKind::Numerical, std::move(code), what);
}

inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Validation: return 2;
    case ErrorKind::Numerical: return 3;
    case ErrorKind::BoundaryContamination: return 4;
    }
    return 1;
}

} // namespace rattle
