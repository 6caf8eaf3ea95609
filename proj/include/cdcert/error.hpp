#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdcert {

enum class ErrorCode {
    invalid_argument,
    domain,
    parse,
    dimension_mismatch,
    zero_column,
    non_finite,
    io,
    schema,
    unsupported_version,
    corrupt_state,
    membership_violation,
    insufficient_data,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::domain: return "domain";
    case ErrorCode::parse: return "parse";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::zero_column: return "zero_column";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::io: return "io";
    case ErrorCode::schema: return "schema";
    case ErrorCode::unsupported_version: return "unsupported_version";
    case ErrorCode::corrupt_state: return "corrupt_state";
    case ErrorCode::membership_violation: return "membership_violation";
    case ErrorCode::insufficient_data: return "insufficient_data";
    }
    return "unknown";
}

/// Exception carrying a machine-readable failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace cdcert
