#include "moc/error.hpp"

namespace moc {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::EmptySubset: return "EmptySubset";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::FormatViolation: return "FormatViolation";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NormTooSmall: return "NormTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InsufficientSlides: return "InsufficientSlides";
    case ErrorKind::SpecInvalid: return "SpecInvalid";
    case ErrorKind::NeedAtLeastTwoClasses: return "NeedAtLeastTwoClasses";
    case ErrorKind::NoBackgroundPrompts: return "NoBackgroundPrompts";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MissingCoords: return "MissingCoords";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
{
}

int exit_code_for(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::EmptySubset:
        return 1;
    case ErrorKind::NonFiniteLoss:
        return 3;
    default:
        return 2;
    }
}

} // namespace moc
