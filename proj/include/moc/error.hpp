#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moc {

enum class ErrorKind {
    // usage
    Usage,
    EmptySubset,
    // data / format
    IoFailure,
    FormatViolation,
    NonFiniteValue,
    NormTooSmall,
    DimensionMismatch,
    InsufficientSlides,
    SpecInvalid,
    NeedAtLeastTwoClasses,
    NoBackgroundPrompts,
    IndexOutOfRange,
    LabelOutOfRange,
    EmptyTrainingSet,
    DegenerateLabels,
    LengthMismatch,
    MissingCoords,
    // numeric
    NonFiniteLoss,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Exit code taxonomy of the command-line tool: 1 usage, 2 data/format, 3 numeric.
int exit_code_for(ErrorKind kind) noexcept;

} // namespace moc
