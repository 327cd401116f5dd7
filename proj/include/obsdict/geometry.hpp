#pragma once

#include <compare>

namespace obsdict {

/// Axis-aligned half-open pixel rectangle [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  long area() const noexcept { return empty() ? 0 : static_cast<long>(width()) * height(); }
  bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool contains(const Rect& r) const noexcept {
    return r.x0 >= x0 && r.y0 >= y0 && r.x1 <= x1 && r.y1 <= y1;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace obsdict
