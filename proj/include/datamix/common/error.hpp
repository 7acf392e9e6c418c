#pragma once

#include <stdexcept>
#include <string>

namespace datamix {

// Error carrying a stable machine-readable code next to the human message.
// Codes are short snake_case tags ("insufficient_observations", ...) that
// reports and tests match on.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Raised when a configuration or parameter violates a precondition.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error("invalid_parameter", field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace datamix
