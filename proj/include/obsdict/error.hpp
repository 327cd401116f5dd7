#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obsdict {

enum class Errc {
  TruncatedSequence,
  TrailingInput,
  UnknownOperator,
  InvalidCodepoint,
  InvalidUtf8,
  DegenerateBox,
  EmptyImage,
  EmptyGlyph,
  EmptyDraft,
  ContainmentUnsatisfiable,
  DuplicateLabel,
  BuildFailed,
  EmptyDictionary,
  DimensionMismatch,
  LengthMismatch,
  SizeMismatch,
  InsufficientSamples,
  EmptyCharset,
  InvalidArgument,
  TestLeakage,
  Io,
  Format,
};

std::string_view errc_name(Errc c) noexcept;

/// Domain error carrying a machine-checkable code. Every failure the library
/// reports to callers is one of these.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace obsdict
