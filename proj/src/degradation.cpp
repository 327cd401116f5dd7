#include "obsdict/degradation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

#include "obsdict/error.hpp"
#include "obsdict/random.hpp"

namespace obsdict::degradation {

namespace {

Glyph gaussian_blur(const Glyph& g, double sigma) {
  const int n = g.size();
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[static_cast<std::size_t>(i + radius)];
  }
  for (double& k : kernel) k /= sum;

  auto clamp = [n](int v) { return std::clamp(v, 0, n - 1); };
  std::vector<double> tmp(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[static_cast<std::size_t>(i + radius)] * g.at(clamp(x + i), y);
      tmp[static_cast<std::size_t>(y) * n + x] = acc;
    }
  Glyph out(n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(clamp(y + i)) * n + x];
      }
      out.at(x, y) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  return out;
}

}  // namespace

std::string_view kind_name(Kind k) noexcept {
  switch (k) {
    case Kind::Blur: return "blur";
    case Kind::Noise: return "noise";
    case Kind::Erode: return "erode";
    case Kind::Mask: return "mask";
  }
  return "?";
}

Kind parse_kind(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Kind k : kAllKinds)
    if (kind_name(k) == lower) return k;
  throw Error(Errc::InvalidArgument, "unknown degradation kind '" + std::string(name) + "'");
}

void DegradationSpec::validate() const {
  if (severity < 1 || severity > 3) throw Error(Errc::InvalidArgument, "severity must be 1, 2 or 3");
}

Rect mask_rect(int size, int severity, std::uint64_t seed) {
  SplitMix64 rng(hash64({tag("mask"), seed}));
  const double area = kMaskArea[static_cast<std::size_t>(severity - 1)] * size * size;
  const double aspect = rng.uniform(0.5, 2.0);  // width / height
  const int w = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, size);
  const int h = std::clamp(static_cast<int>(std::lround(std::sqrt(area / aspect))), 1, size);
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - w + 1)));
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - h + 1)));
  return Rect{x0, y0, x0 + w, y0 + h};
}

Glyph degrade(const Glyph& g, const DegradationSpec& spec) {
  spec.validate();
  const auto s = static_cast<std::size_t>(spec.severity - 1);
  switch (spec.kind) {
    case Kind::Blur:
      return gaussian_blur(g, kBlurSigma[s]);
    case Kind::Noise: {
      SplitMix64 rng(hash64({tag("noise"), spec.seed}));
      Glyph out = g;
      for (float& v : out.pixels()) {
        v = static_cast<float>(std::clamp(static_cast<double>(v) + kNoiseSigma[s] * rng.normal(), 0.0, 1.0));
      }
      return out;
    }
    case Kind::Erode:
      return glyph::erode_cross(g, spec.severity);
    case Kind::Mask: {
      const Rect r = mask_rect(g.size(), spec.severity, spec.seed);
      Glyph out = g;
      for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x) out.at(x, y) = 0.0f;
      return out;
    }
  }
  return g;
}

}  // namespace obsdict::degradation
