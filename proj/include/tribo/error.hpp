#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tribo {

enum class ErrorKind {
    InvalidSignal,
    DivisionByZero,
    DegenerateInput,
    ShapeError,
    TooShort,
    InsufficientKnots,
    NotOscillatory,
    IndexError,
    LengthError,
    InvalidInput,
    InvalidSpec,
    TooFew,
    EmptyDataset,
    NoBeats,
    ProtocolError,
    ChecksumError,
    Unsupported,
    ParseError,
    IoError,
    ModelError,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. The kind is stable and machine-readable; the
/// message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tribo
