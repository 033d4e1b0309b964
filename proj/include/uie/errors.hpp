#pragma once

#include <stdexcept>
#include <string>

namespace uie {

enum class ErrorCode {
    // schema
    EmptySchema,
    DuplicateClass,
    MissingArguments,
    MalformedJson,
    SchemaViolation,
    // records
    UnbalancedMarkers,
    Unparseable,
    // gateway
    Exhausted,
    BadResponse,
    GatewayFailure,
    // pipeline
    UnknownAdapter,
    InvalidConfig,
    SubtaskRequired,
    EmptyPool,
    PolicyFailure,
    // misc
    IoError,
    UsageError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace uie
