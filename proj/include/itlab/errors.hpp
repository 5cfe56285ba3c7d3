#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace itlab {

enum class ErrorCode {
    invalid_argument,
    cap_exceeded,
    shape_mismatch,
    unequal_cardinalities,
    missing_names,
    length_mismatch,
    empty_input,
    all_zero_mass,
    domain_error,
    not_symmetric,
    indefinite_beyond_tolerance,
    bisection_failure,
    config_mismatch,
    dimension_mismatch,
    stale_cache,
    mode_mismatch,
    empty_trace,
    config_invalid,
    io_error,
    parse_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without string matching.
class LabError : public std::runtime_error {
public:
    LabError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw LabError(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition)
        fail(code, message);
}

} // namespace itlab
