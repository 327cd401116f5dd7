#include "obsdict/error.hpp"

namespace obsdict {

std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::TruncatedSequence: return "TruncatedSequence";
    case Errc::TrailingInput: return "TrailingInput";
    case Errc::UnknownOperator: return "UnknownOperator";
    case Errc::InvalidCodepoint: return "InvalidCodepoint";
    case Errc::InvalidUtf8: return "InvalidUtf8";
    case Errc::DegenerateBox: return "DegenerateBox";
    case Errc::EmptyImage: return "EmptyImage";
    case Errc::EmptyGlyph: return "EmptyGlyph";
    case Errc::EmptyDraft: return "EmptyDraft";
    case Errc::ContainmentUnsatisfiable: return "ContainmentUnsatisfiable";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::BuildFailed: return "BuildFailed";
    case Errc::EmptyDictionary: return "EmptyDictionary";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::EmptyCharset: return "EmptyCharset";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::TestLeakage: return "TestLeakage";
    case Errc::Io: return "Io";
    case Errc::Format: return "Format";
  }
  return "Unknown";
}

}  // namespace obsdict
