#include "uie/errors.hpp"

namespace uie {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptySchema: return "EmptySchema";
    case ErrorCode::DuplicateClass: return "DuplicateClass";
    case ErrorCode::MissingArguments: return "MissingArguments";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnbalancedMarkers: return "UnbalancedMarkers";
    case ErrorCode::Unparseable: return "Unparseable";
    case ErrorCode::Exhausted: return "Exhausted";
    case ErrorCode::BadResponse: return "BadResponse";
    case ErrorCode::GatewayFailure: return "GatewayFailure";
    case ErrorCode::UnknownAdapter: return "UnknownAdapter";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SubtaskRequired: return "SubtaskRequired";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::PolicyFailure: return "PolicyFailure";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
    }
    return "UnknownError";
}

} // namespace uie
