#pragma once

#include <stdexcept>
#include <string>

namespace cough {

// Base class for all recoverable pipeline errors. Each concrete type maps to
// one failure mode named in the public contracts, so callers can catch by
// type and the CLI/service layers can translate to exit codes / HTTP status.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// audio_io
struct NotWav : Error {
    using Error::Error;
};
struct UnsupportedEncoding : Error {
    using Error::Error;
};
struct TruncatedFile : Error {
    using Error::Error;
};
struct IoFailure : Error {
    using Error::Error;
};
struct ConverterFailed : Error {
    using Error::Error;
};
struct ConverterMissing : Error {
    using Error::Error;
};

// dsp / segmentation
struct SilentAudio : Error {
    using Error::Error;
};
struct NoCoughDetected : Error {
    using Error::Error;
};

// model / training
struct ShapeMismatch : Error {
    using Error::Error;
};
struct SingleClass : Error {
    using Error::Error;
};
struct DivergedLoss : Error {
    using Error::Error;
};
struct EmptyScores : Error {
    using Error::Error;
};

// serialization
struct BadMagic : Error {
    using Error::Error;
};
struct VersionUnsupported : Error {
    using Error::Error;
};
struct WeightCountMismatch : Error {
    using Error::Error;
};

// dataset / eval
struct TooFewIndividuals : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct EmptyGroup : Error {
    using Error::Error;
};

}  // namespace cough
