#include "itlab/errors.hpp"

namespace itlab {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::cap_exceeded: return "CapExceeded";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::unequal_cardinalities: return "UnequalCardinalities";
    case ErrorCode::missing_names: return "MissingNames";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::all_zero_mass: return "AllZeroMass";
    case ErrorCode::domain_error: return "DomainError";
    case ErrorCode::not_symmetric: return "NotSymmetric";
    case ErrorCode::indefinite_beyond_tolerance: return "IndefiniteBeyondTolerance";
    case ErrorCode::bisection_failure: return "BisectionFailure";
    case ErrorCode::config_mismatch: return "ConfigMismatch";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::stale_cache: return "StaleCache";
    case ErrorCode::mode_mismatch: return "ModeMismatch";
    case ErrorCode::empty_trace: return "EmptyTrace";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
    }
    return "Unknown";
}

} // namespace itlab
