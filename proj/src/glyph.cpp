#include "obsdict/glyph.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "obsdict/error.hpp"

namespace obsdict {

Glyph::Glyph(int size) : size_(size), pixels_(static_cast<std::size_t>(size) * size, 0.0f) {
  if (size <= 0) throw Error(Errc::InvalidArgument, "glyph size must be positive");
}

Glyph::Glyph(int size, std::vector<float> pixels) : size_(size), pixels_(std::move(pixels)) {
  if (size <= 0 || pixels_.size() != static_cast<std::size_t>(size) * size) {
    throw Error(Errc::SizeMismatch, "pixel buffer does not match glyph size");
  }
  for (float& v : pixels_) v = std::clamp(v, 0.0f, 1.0f);
}

long Glyph::ink_count() const noexcept {
  long n = 0;
  for (float v : pixels_) n += v >= 0.5f ? 1 : 0;
  return n;
}

std::optional<Rect> Glyph::ink_bbox() const noexcept {
  Rect r{size_, size_, 0, 0};
  bool any = false;
  for (int y = 0; y < size_; ++y)
    for (int x = 0; x < size_; ++x)
      if (ink(x, y)) {
        any = true;
        r.x0 = std::min(r.x0, x);
        r.y0 = std::min(r.y0, y);
        r.x1 = std::max(r.x1, x + 1);
        r.y1 = std::max(r.y1, y + 1);
      }
  if (!any) return std::nullopt;
  return r;
}

namespace glyph {
namespace {

int round_px(double v) { return static_cast<int>(std::floor(v + 0.5)); }

/// Binary mask with its own dimensions; the resampler's working type.
struct Mask {
  int w = 0;
  int h = 0;
  std::vector<std::uint8_t> m;
  std::uint8_t at(int x, int y) const { return m[static_cast<std::size_t>(y) * w + x]; }
};

std::vector<std::uint8_t> otsu_ink_mask(const GrayImage& image) {
  std::array<long, 256> hist{};
  for (auto p : image.pixels) ++hist[p];
  const long n = static_cast<long>(image.pixels.size());
  double total_sum = 0.0;
  for (int v = 0; v < 256; ++v) total_sum += static_cast<double>(v) * hist[v];

  int best_t = -1;
  double best_between = -1.0;
  long w0 = 0;
  double sum0 = 0.0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    sum0 += static_cast<double>(t) * hist[t];
    const long w1 = n - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double m0 = sum0 / static_cast<double>(w0);
    const double m1 = (total_sum - sum0) / static_cast<double>(w1);
    const double between = static_cast<double>(w0) * static_cast<double>(w1) * (m0 - m1) * (m0 - m1);
    if (between > best_between) {
      best_between = between;
      best_t = t;
    }
  }
  if (best_t < 0) throw Error(Errc::EmptyImage, "image has a single intensity level");

  long dark = 0;
  for (int v = 0; v <= best_t; ++v) dark += hist[v];
  const bool dark_is_ink = 2 * dark <= n;
  std::vector<std::uint8_t> mask(image.pixels.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool is_dark = image.pixels[i] <= best_t;
    mask[i] = (is_dark == dark_is_ink) ? 1 : 0;
  }
  return mask;
}

/// Crop `src` to `box`, rescale so the larger side equals `target`, centre on
/// a size x size canvas. Corner-aligned bilinear sampling: the first and last
/// output samples land exactly on the crop's edge pixels, so upscaling never
/// loses the ink box edges (which makes normalize a fixed point).
Glyph resample(const Mask& src, const Rect& box, int target, int size) {
  const int bw = box.width();
  const int bh = box.height();
  const double s = static_cast<double>(target) / std::max(bw, bh);
  const int ow = std::clamp(round_px(bw * s), 1, size);
  const int oh = std::clamp(round_px(bh * s), 1, size);
  const int ox = (size - ow) / 2;
  const int oy = (size - oh) / 2;

  auto sample = [&](double sx, double sy) {
    const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, bw - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, bh - 1);
    const int x1 = std::min(x0 + 1, bw - 1);
    const int y1 = std::min(y0 + 1, bh - 1);
    const double fx = std::clamp(sx - x0, 0.0, 1.0);
    const double fy = std::clamp(sy - y0, 0.0, 1.0);
    auto v = [&](int x, int y) { return static_cast<double>(src.at(box.x0 + x, box.y0 + y)); };
    const double top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
    const double bot = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
    return top * (1.0 - fy) + bot * fy;
  };

  Glyph out(size);
  for (int j = 0; j < oh; ++j) {
    const double sy = oh > 1 ? static_cast<double>(j) * (bh - 1) / (oh - 1) : (bh - 1) / 2.0;
    for (int i = 0; i < ow; ++i) {
      const double sx = ow > 1 ? static_cast<double>(i) * (bw - 1) / (ow - 1) : (bw - 1) / 2.0;
      out.at(ox + i, oy + j) = sample(sx, sy) >= 0.5 ? 1.0f : 0.0f;
    }
  }
  return out;
}

Mask to_mask(const Glyph& g) {
  Mask m{g.size(), g.size(), std::vector<std::uint8_t>(g.pixels().size())};
  for (std::size_t i = 0; i < m.m.size(); ++i) m.m[i] = g.pixels()[i] >= 0.5f ? 1 : 0;
  return m;
}

constexpr int kDx8[8] = {0, 1, 1, 1, 0, -1, -1, -1};  // N, NE, E, SE, S, SW, W, NW
constexpr int kDy8[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

}  // namespace

std::vector<int> label_components(const Glyph& g, int& count) {
  const int n = g.size();
  std::vector<int> label(static_cast<std::size_t>(n) * n, -1);
  count = 0;
  std::vector<int> stack;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (!g.ink(x, y) || label[static_cast<std::size_t>(y) * n + x] >= 0) continue;
      const int id = count++;
      stack.push_back(y * n + x);
      label[static_cast<std::size_t>(y) * n + x] = id;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % n;
        const int py = p / n;
        for (int k = 0; k < 8; ++k) {
          const int qx = px + kDx8[k];
          const int qy = py + kDy8[k];
          if (!g.ink_or_bg(qx, qy)) continue;
          auto& l = label[static_cast<std::size_t>(qy) * n + qx];
          if (l >= 0) continue;
          l = id;
          stack.push_back(qy * n + qx);
        }
      }
    }
  return label;
}

int neighbour_count(const Glyph& g, int x, int y) {
  int c = 0;
  for (int k = 0; k < 8; ++k) c += g.ink_or_bg(x + kDx8[k], y + kDy8[k]) ? 1 : 0;
  return c;
}

Glyph binarize(const Glyph& g) {
  Glyph out(g.size());
  for (std::size_t i = 0; i < out.pixels().size(); ++i) out.pixels()[i] = g.pixels()[i] >= 0.5f ? 1.0f : 0.0f;
  return out;
}

Glyph normalize(const GrayImage& image, int size) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(Errc::EmptyImage, "image has no pixels");
  }
  Mask mask{image.width, image.height, otsu_ink_mask(image)};
  const int target = round_px(kInkExtent * size);

  for (int pass = 0; pass < 4; ++pass) {
    Rect box{mask.w, mask.h, 0, 0};
    bool any = false;
    for (int y = 0; y < mask.h; ++y)
      for (int x = 0; x < mask.w; ++x)
        if (mask.at(x, y)) {
          any = true;
          box.x0 = std::min(box.x0, x);
          box.y0 = std::min(box.y0, y);
          box.x1 = std::max(box.x1, x + 1);
          box.y1 = std::max(box.y1, y + 1);
        }
    if (!any) throw Error(Errc::EmptyImage, "no ink after thresholding");
    Glyph out = resample(mask, box, target, size);
    // A downscale can drop edge rows; one more (upscaling) pass restores the
    // exact target box. Stop once the ink box is what was placed.
    const auto got = out.ink_bbox();
    if (!got) throw Error(Errc::EmptyImage, "no ink survived resampling");
    if (std::max(got->width(), got->height()) == target && got->x0 == (size - got->width()) / 2 &&
        got->y0 == (size - got->height()) / 2) {
      return out;
    }
    mask = to_mask(out);
  }
  throw Error(Errc::EmptyImage, "normalization did not converge");
}

Glyph normalize(const Glyph& g) { return normalize(render(g), g.size()); }

GrayImage render(const Glyph& g) {
  GrayImage img{g.size(), g.size(), std::vector<std::uint8_t>(g.pixels().size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(round_px(255.0 * (1.0 - static_cast<double>(g.pixels()[i]))));
  }
  return img;
}

Glyph skeletonize(const Glyph& g) {
  const int n = g.size();
  Glyph img = binarize(g);
  std::vector<int> remove;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int step = 0; step < 2; ++step) {
      remove.clear();
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          if (!img.ink(x, y)) continue;
          int p[8];
          for (int k = 0; k < 8; ++k) p[k] = img.ink_or_bg(x + kDx8[k], y + kDy8[k]) ? 1 : 0;
          const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
          if (b < 2 || b > 6) continue;
          int a = 0;
          for (int k = 0; k < 8; ++k) a += (p[k] == 0 && p[(k + 1) % 8] == 1) ? 1 : 0;
          if (a != 1) continue;
          // p[0]=N(P2) p[2]=E(P4) p[4]=S(P6) p[6]=W(P8)
          if (step == 0) {
            if (p[0] * p[2] * p[4] != 0 || p[2] * p[4] * p[6] != 0) continue;
          } else {
            if (p[0] * p[2] * p[6] != 0 || p[0] * p[4] * p[6] != 0) continue;
          }
          remove.push_back(y * n + x);
        }
      for (int idx : remove) img.pixels()[static_cast<std::size_t>(idx)] = 0.0f;
      if (!remove.empty()) changed = true;
    }
  }

  // Restore a pixel for any component the parallel rule erased completely.
  int before = 0;
  const auto labels = label_components(binarize(g), before);
  std::vector<char> survived(static_cast<std::size_t>(before), 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0 && img.pixels()[i] >= 0.5f) survived[static_cast<std::size_t>(labels[i])] = 1;
  for (int c = 0; c < before; ++c) {
    if (survived[static_cast<std::size_t>(c)]) continue;
    double sx = 0, sy = 0;
    long cnt = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) {
        sx += static_cast<double>(i % static_cast<std::size_t>(n));
        sy += static_cast<double>(i / static_cast<std::size_t>(n));
        ++cnt;
      }
    sx /= static_cast<double>(cnt);
    sy /= static_cast<double>(cnt);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != c) continue;
      const double dx = static_cast<double>(i % static_cast<std::size_t>(n)) - sx;
      const double dy = static_cast<double>(i / static_cast<std::size_t>(n)) - sy;
      if (dx * dx + dy * dy < best_d) {
        best_d = dx * dx + dy * dy;
        best = i;
      }
    }
    img.pixels()[best] = 1.0f;
  }
  return img;
}

Glyph prune(const Glyph& skeleton, int min_length) {
  const int n = skeleton.size();
  Glyph img = binarize(skeleton);
  auto crossing = [&](int x, int y) {
    int a = 0;
    for (int k = 0; k < 8; ++k) {
      const bool p = img.ink_or_bg(x + kDx8[k], y + kDy8[k]);
      const bool q = img.ink_or_bg(x + kDx8[(k + 1) % 8], y + kDy8[(k + 1) % 8]);
      a += (!p && q) ? 1 : 0;
    }
    return a;
  };

  // Endpoints are collected up front so pruning one spur cannot expose new
  // endpoints within the same pass.
  std::vector<std::pair<int, int>> endpoints;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (img.ink(x, y) && (neighbour_count(img, x, y) <= 1 || crossing(x, y) == 1)) endpoints.emplace_back(x, y);

  std::vector<std::pair<int, int>> doomed;
  std::vector<char> visited(static_cast<std::size_t>(n) * n, 0);
  for (auto [ex, ey] : endpoints) {
    if (!img.ink(ex, ey)) continue;
    std::vector<std::pair<int, int>> path{{ex, ey}};
    std::vector<std::size_t> touched{static_cast<std::size_t>(ey) * n + ex};
    visited[touched.back()] = 1;
    int cx = ex, cy = ey;
    while (static_cast<int>(path.size()) < min_length) {
      int nx = -1, ny = -1;
      for (int k : {0, 2, 4, 6, 1, 3, 5, 7}) {  // 4-neighbours first
        const int qx = cx + kDx8[k];
        const int qy = cy + kDy8[k];
        if (img.ink_or_bg(qx, qy) && !visited[static_cast<std::size_t>(qy) * n + qx]) {
          nx = qx;
          ny = qy;
          break;
        }
      }
      if (nx < 0 || crossing(nx, ny) >= 3) break;
      cx = nx;
      cy = ny;
      touched.push_back(static_cast<std::size_t>(cy) * n + cx);
      visited[touched.back()] = 1;
      path.push_back({cx, cy});
    }
    for (auto i : touched) visited[i] = 0;
    if (static_cast<int>(path.size()) < min_length) doomed.insert(doomed.end(), path.begin(), path.end());
  }
  for (auto [x, y] : doomed) img.at(x, y) = 0.0f;
  // Corner pixels left stranded next to a removed spur.
  for (auto [x, y] : doomed)
    for (int k = 0; k < 8; ++k) {
      const int qx = x + kDx8[k];
      const int qy = y + kDy8[k];
      if (img.ink_or_bg(qx, qy) && neighbour_count(img, qx, qy) == 0) img.at(qx, qy) = 0.0f;
    }
  return img;
}

Glyph dilate(const Glyph& g, double radius) {
  if (radius < 1.0) return binarize(g);
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  std::vector<std::pair<int, int>> disc;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (static_cast<double>(dx * dx + dy * dy) <= r2) disc.emplace_back(dx, dy);
  const int n = g.size();
  Glyph out(n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (!g.ink(x, y)) continue;
      for (auto [dx, dy] : disc) {
        const int qx = x + dx;
        const int qy = y + dy;
        if (qx >= 0 && qy >= 0 && qx < n && qy < n) out.at(qx, qy) = 1.0f;
      }
    }
  return out;
}

Glyph restroke(const Glyph& skeleton, int width) {
  if (width < 1 || width > 7) throw Error(Errc::InvalidArgument, "stroke width outside [1, 7]");
  return dilate(skeleton, static_cast<double>(width / 2));
}

Glyph erode_cross(const Glyph& g, int iterations) {
  Glyph cur = binarize(g);
  const int n = g.size();
  for (int it = 0; it < iterations; ++it) {
    Glyph next(n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (cur.ink(x, y) && cur.ink_or_bg(x - 1, y) && cur.ink_or_bg(x + 1, y) && cur.ink_or_bg(x, y - 1) &&
            cur.ink_or_bg(x, y + 1)) {
          next.at(x, y) = 1.0f;
        }
    cur = std::move(next);
  }
  return cur;
}

Glyph translate(const Glyph& g, int dx, int dy) {
  const int n = g.size();
  Glyph out(n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int sx = x - dx;
      const int sy = y - dy;
      if (sx >= 0 && sy >= 0 && sx < n && sy < n) out.at(x, y) = g.at(sx, sy);
    }
  return out;
}

Glyph combine(const Glyph& a, const Glyph& b) {
  if (a.size() != b.size()) throw Error(Errc::SizeMismatch, "combine of different glyph sizes");
  Glyph out(a.size());
  for (std::size_t i = 0; i < out.pixels().size(); ++i) out.pixels()[i] = std::max(a.pixels()[i], b.pixels()[i]);
  return out;
}

double ink_fraction(const Glyph& g, const Rect& region) {
  long total = 0;
  long inside = 0;
  for (int y = 0; y < g.size(); ++y)
    for (int x = 0; x < g.size(); ++x) {
      if (!g.ink(x, y)) continue;
      ++total;
      if (region.contains(x, y)) ++inside;
    }
  return total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
}

int connected_components(const Glyph& g) {
  int count = 0;
  (void)label_components(g, count);
  return count;
}

}  // namespace glyph
}  // namespace obsdict
