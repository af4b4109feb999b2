#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace soundobj {

enum class Errc {
    UnreadableFile,
    UnsupportedEncoding,
    TooShort,
    InvalidRange,
    SampleRateMismatch,
    IndexOutOfRange,
    AmplitudeTooLow,
    LengthMismatch,
    TooFewPoints,
    NoHarmonicStructure,
    NoFundamental,
    InsufficientShiftSamples,
    NoStrongHarmonics,
    AllAgesMissing,
    SingleClassTrainingSet,
    ClassTooSmall,
    SingleClassEvaluationSet,
    SpecInvalid,
    MissingLabel,
    InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

// All library failures are reported through this type; code() is stable and
// is what the CLI maps onto exit codes.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace soundobj
