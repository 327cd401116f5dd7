#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "obsdict/geometry.hpp"

namespace obsdict {

inline constexpr int kGlyphSize = 96;

/// 8-bit single-channel raster in the usual file convention: dark ink on a
/// light background, 0 = black.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Square raster, row-major intensities in [0, 1] with 1.0 = ink.
class Glyph {
 public:
  Glyph() : Glyph(kGlyphSize) {}
  explicit Glyph(int size);
  Glyph(int size, std::vector<float> pixels);

  int size() const noexcept { return size_; }
  Rect canvas() const noexcept { return {0, 0, size_, size_}; }

  float at(int x, int y) const noexcept { return pixels_[static_cast<std::size_t>(y) * size_ + x]; }
  float& at(int x, int y) noexcept { return pixels_[static_cast<std::size_t>(y) * size_ + x]; }
  bool ink(int x, int y) const noexcept { return at(x, y) >= 0.5f; }
  /// Out-of-canvas reads are background.
  bool ink_or_bg(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < size_ && y < size_ && ink(x, y);
  }

  std::span<const float> pixels() const noexcept { return pixels_; }
  std::span<float> pixels() noexcept { return pixels_; }

  long ink_count() const noexcept;
  bool empty() const noexcept { return ink_count() == 0; }
  std::optional<Rect> ink_bbox() const noexcept;

  friend bool operator==(const Glyph&, const Glyph&) = default;

 private:
  int size_;
  std::vector<float> pixels_;
};

namespace glyph {

/// Share of the canvas extent the ink bounding box occupies after normalize.
inline constexpr double kInkExtent = 0.8;

/// Otsu binarization (minority class is ink), crop to the ink box, isotropic
/// bilinear rescale of the larger side to round(0.8 * size), centre, and
/// re-threshold at 0.5. Throws EmptyImage when no ink survives.
Glyph normalize(const GrayImage& image, int size = kGlyphSize);
/// normalize(render(g)).
Glyph normalize(const Glyph& g);

/// Dark-on-light 8-bit rendering, v -> round(255 * (1 - v)).
GrayImage render(const Glyph& g);

/// Zhang-Suen thinning. Components erased entirely by the parallel rule
/// (e.g. 2x2 blocks) keep one pixel so the component count is preserved.
Glyph skeletonize(const Glyph& g);

/// Removes skeleton branches shorter than min_length that end in an endpoint,
/// including isolated short segments.
Glyph prune(const Glyph& skeleton, int min_length);

/// Dilation by a disc of radius floor(width / 2); width in [1, 7].
Glyph restroke(const Glyph& skeleton, int width);

/// Binary dilation by the disc {dx^2 + dy^2 <= radius^2}.
Glyph dilate(const Glyph& g, double radius);

/// Binary erosion by the 3x3 cross, `iterations` times.
Glyph erode_cross(const Glyph& g, int iterations);

Glyph translate(const Glyph& g, int dx, int dy);

/// Pixelwise max.
Glyph combine(const Glyph& a, const Glyph& b);

/// Fraction of ink pixels (>= 0.5) that fall inside region; 0 for an empty glyph.
double ink_fraction(const Glyph& g, const Rect& region);

/// Number of 8-connected ink components.
int connected_components(const Glyph& g);
/// Per-pixel 8-connected component ids (-1 for background), row-major.
std::vector<int> label_components(const Glyph& g, int& count);
/// Ink pixels among the 8 neighbours.
int neighbour_count(const Glyph& g, int x, int y);

/// Binary copy: 1 where v >= 0.5, else 0.
Glyph binarize(const Glyph& g);

}  // namespace glyph
}  // namespace obsdict
