#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ozone {

enum class ErrorCode {
    // datapipe
    FileNotFound,
    HeaderMissing,
    MappedColumnAbsent,
    AllRowsDropped,
    EmptyColumn,
    MissingValuesPresent,
    UnknownFeature,
    ZeroVariance,
    DimensionMismatch,
    DegenerateSplit,
    // regress
    InvalidConfig,
    SingularSystem,
    TooFewRows,
    Diverged,
    NonFiniteInput,
    EmptyDataset,
    // analysis
    DegenerateModel,
    // modelpack
    NonFiniteModel,
    BadMagic,
    UnsupportedVersion,
    ChecksumMismatch,
    Truncated,
    MalformedField,
    // simdevice
    NonPositivePpm,
    SaturatedReading,
    ArtifactInvalid,
};

std::string_view error_name(ErrorCode code) noexcept;

// Every domain failure in the library is reported through this type. The
// message is prefixed with the error name so it can be surfaced verbatim.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }

    // Same error with extra context prepended to the detail, e.g. "fold 3".
    Error tagged(const std::string& context) const;

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace ozone
