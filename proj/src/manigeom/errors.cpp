#include "errors.hpp"

namespace mg {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Format: return "format_error";
    case ErrorCode::Corruption: return "corruption_error";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::UnknownTask: return "unknown_task";
    case ErrorCode::InsufficientClasses: return "insufficient_classes";
    case ErrorCode::DegenerateCentroid: return "degenerate_centroid";
    case ErrorCode::DegenerateManifold: return "degenerate_manifold";
    case ErrorCode::Numerical: return "numerical_error";
    case ErrorCode::Io: return "io_error";
    }
    return "unknown_error";
}

} // namespace mg
