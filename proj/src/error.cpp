#include "ozone/error.hpp"

namespace ozone {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::HeaderMissing: return "HeaderMissing";
    case ErrorCode::MappedColumnAbsent: return "MappedColumnAbsent";
    case ErrorCode::AllRowsDropped: return "AllRowsDropped";
    case ErrorCode::EmptyColumn: return "EmptyColumn";
    case ErrorCode::MissingValuesPresent: return "MissingValuesPresent";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::NonFiniteModel: return "NonFiniteModel";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::MalformedField: return "MalformedField";
    case ErrorCode::NonPositivePpm: return "NonPositivePpm";
    case ErrorCode::SaturatedReading: return "SaturatedReading";
    case ErrorCode::ArtifactInvalid: return "ArtifactInvalid";
    }
    return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& detail) {
    std::string msg(error_name(code));
    if (!detail.empty()) {
        msg += ": ";
        msg += detail;
    }
    return msg;
}
} // namespace

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code), detail_(detail) {}

Error Error::tagged(const std::string& context) const {
    return Error(code_, detail_.empty() ? context : context + ": " + detail_);
}

} // namespace ozone
