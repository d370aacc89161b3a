#pragma once

#include <stdexcept>
#include <string>

namespace gcims {

/// Base of every error this library throws on contract violations.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define GCIMS_DEFINE_ERROR(Name) \
    struct Name : Error {        \
        using Error::Error;      \
    }

// file formats
GCIMS_DEFINE_ERROR(BadMagic);
GCIMS_DEFINE_ERROR(UnsupportedVersion);
GCIMS_DEFINE_ERROR(TruncatedPayload);
GCIMS_DEFINE_ERROR(MalformedHeader);
GCIMS_DEFINE_ERROR(MalformedMetadata);
GCIMS_DEFINE_ERROR(MissingMetadataFile);
GCIMS_DEFINE_ERROR(NoValidSamples);
GCIMS_DEFINE_ERROR(IoFailure);

// preprocessing
GCIMS_DEFINE_ERROR(WindowTooLarge);
GCIMS_DEFINE_ERROR(DegenerateSpectrum);

// features and models
GCIMS_DEFINE_ERROR(DegenerateData);
GCIMS_DEFINE_ERROR(DimensionMismatch);
GCIMS_DEFINE_ERROR(SingleClassTraining);
GCIMS_DEFINE_ERROR(EmptyNode);

// evaluation
GCIMS_DEFINE_ERROR(ClassTooSmall);
GCIMS_DEFINE_ERROR(KTooLarge);
GCIMS_DEFINE_ERROR(LengthMismatch);
GCIMS_DEFINE_ERROR(UnlabeledSamples);

// configuration
GCIMS_DEFINE_ERROR(ConfigInvalid);
GCIMS_DEFINE_ERROR(InvalidArgument);

#undef GCIMS_DEFINE_ERROR

}  // namespace gcims
