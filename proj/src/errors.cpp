#include "soundobj/errors.hpp"

namespace soundobj {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::UnreadableFile: return "UnreadableFile";
        case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
        case Errc::TooShort: return "TooShort";
        case Errc::InvalidRange: return "InvalidRange";
        case Errc::SampleRateMismatch: return "SampleRateMismatch";
        case Errc::IndexOutOfRange: return "IndexOutOfRange";
        case Errc::AmplitudeTooLow: return "AmplitudeTooLow";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::TooFewPoints: return "TooFewPoints";
        case Errc::NoHarmonicStructure: return "NoHarmonicStructure";
        case Errc::NoFundamental: return "NoFundamental";
        case Errc::InsufficientShiftSamples: return "InsufficientShiftSamples";
        case Errc::NoStrongHarmonics: return "NoStrongHarmonics";
        case Errc::AllAgesMissing: return "AllAgesMissing";
        case Errc::SingleClassTrainingSet: return "SingleClassTrainingSet";
        case Errc::ClassTooSmall: return "ClassTooSmall";
        case Errc::SingleClassEvaluationSet: return "SingleClassEvaluationSet";
        case Errc::SpecInvalid: return "SpecInvalid";
        case Errc::MissingLabel: return "MissingLabel";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace soundobj
