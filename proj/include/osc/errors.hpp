#pragma once

#include <stdexcept>
#include <string>

namespace osc {

/// Base class for every error thrown by the library. `kind()` is a short
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Precondition or domain-invariant violation (bad shapes, overlapping
/// ranges, duplicate vocabulary entries, ...).
class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid"; }
};

/// Malformed or unreadable on-disk artifact.
class FormatError : public Error {
public:
    enum class Code { BadMagic, BadVersion, Truncated, SizeMismatch, Io, Parse };

    FormatError(Code code, const std::string& what) : Error(what), code_(code) {}

    Code code() const noexcept { return code_; }
    const char* kind() const noexcept override;

private:
    Code code_;
};

/// Training diverged (non-finite loss or parameters).
class TrainingError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "training"; }
};

inline const char* FormatError::kind() const noexcept {
    switch (code_) {
    case Code::BadMagic: return "bad_magic";
    case Code::BadVersion: return "bad_version";
    case Code::Truncated: return "truncated";
    case Code::SizeMismatch: return "size_mismatch";
    case Code::Io: return "io";
    case Code::Parse: return "parse";
    }
    return "format";
}

}  // namespace osc
