#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "obsdict/glyph.hpp"

namespace obsdict::degradation {

enum class Kind { Blur, Noise, Erode, Mask };

inline constexpr std::array<Kind, 4> kAllKinds = {Kind::Blur, Kind::Noise, Kind::Erode, Kind::Mask};

std::string_view kind_name(Kind k) noexcept;
/// Case-insensitive; throws InvalidArgument for unknown names.
Kind parse_kind(std::string_view name);

struct DegradationSpec {
  Kind kind = Kind::Blur;
  int severity = 1;  // 1 light, 2 medium, 3 heavy
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-severity magnitudes, index = severity - 1.
inline constexpr std::array<double, 3> kBlurSigma = {0.8, 1.6, 2.4};
inline constexpr std::array<double, 3> kNoiseSigma = {0.05, 0.15, 0.30};
inline constexpr std::array<double, 3> kMaskArea = {0.10, 0.20, 0.35};

/// Capture-style degradation of a normalized glyph. The result is not
/// re-normalized; Erode may leave an empty glyph.
Glyph degrade(const Glyph& g, const DegradationSpec& spec);

/// The occluding rectangle Mask would use for this spec on a canvas of `size`.
Rect mask_rect(int size, int severity, std::uint64_t seed);

}  // namespace obsdict::degradation
