#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfdr {

enum class ErrorCode {
    InvalidSignature,
    TimeRegression,
    NothingToSeal,
    IndexOutOfRange,
    MalformedInput,
    PendingNotSealed,
    PseudonymCollision,
    DuplicateSigner,
    MissingPrerequisiteTxs,
    UnknownEvidenceTx,
    UnknownOperationTx,
    WindowNotElapsed,
    SchemaError,
    DanglingReference,
    IoError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidSignature: return "InvalidSignature";
        case ErrorCode::TimeRegression: return "TimeRegression";
        case ErrorCode::NothingToSeal: return "NothingToSeal";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::MalformedInput: return "MalformedInput";
        case ErrorCode::PendingNotSealed: return "PendingNotSealed";
        case ErrorCode::PseudonymCollision: return "PseudonymCollision";
        case ErrorCode::DuplicateSigner: return "DuplicateSigner";
        case ErrorCode::MissingPrerequisiteTxs: return "MissingPrerequisiteTxs";
        case ErrorCode::UnknownEvidenceTx: return "UnknownEvidenceTx";
        case ErrorCode::UnknownOperationTx: return "UnknownOperationTx";
        case ErrorCode::WindowNotElapsed: return "WindowNotElapsed";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::DanglingReference: return "DanglingReference";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Library-wide exception type. `code()` is stable and machine-checkable;
/// `what()` carries a human-readable detail string.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Decode failure; remembers the byte offset where the input stopped making sense.
class MalformedInput : public Error {
public:
    MalformedInput(std::size_t offset, const std::string& detail)
        : Error(ErrorCode::MalformedInput, detail + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace cfdr
