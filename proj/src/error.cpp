#include "tribo/error.hpp"

namespace tribo {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidSignal: return "InvalidSignal";
        case ErrorKind::DivisionByZero: return "DivisionByZero";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::ShapeError: return "ShapeError";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::InsufficientKnots: return "InsufficientKnots";
        case ErrorKind::NotOscillatory: return "NotOscillatory";
        case ErrorKind::IndexError: return "IndexError";
        case ErrorKind::LengthError: return "LengthError";
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::TooFew: return "TooFew";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::NoBeats: return "NoBeats";
        case ErrorKind::ProtocolError: return "ProtocolError";
        case ErrorKind::ChecksumError: return "ChecksumError";
        case ErrorKind::Unsupported: return "Unsupported";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ModelError: return "ModelError";
    }
    return "Unknown";
}

}  // namespace tribo
