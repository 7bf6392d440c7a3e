#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace datascale {

enum class ErrorKind {
    domain,
    singularity,
    insufficient_data,
    duplicate_abscissa,
    schema,
    rank,
    shared_exponent_required,
    mc_failure,
    parse,
    io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for all validation failures; the kind tells callers
// (and the CLI exit-code mapping) what went wrong.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace datascale
