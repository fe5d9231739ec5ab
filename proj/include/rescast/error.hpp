#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rescast {

enum class ErrorKind {
    Schema,
    Parse,
    Fetch,
    HttpStatus,
    EmptySeries,
    DegenerateRange,
    InsufficientData,
    Config,
    DegenerateReservoir,
    Input,
    Underdetermined,
    NotFitted,
    Divergence,
    Shape,
    Empty,
    DegenerateTest,
    Artifact,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the toolkit; `kind()` distinguishes the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// CLI exit status for an error kind: 1 config, 2 data/fetch, 3 artifact, 4 divergence.
int exit_code(ErrorKind kind);

}  // namespace rescast
