#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tabletop {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  // fmod can round up to exactly +pi for inputs a hair below an odd multiple.
  if (w >= kPi) w -= 2.0 * kPi;
  return w;
}

/// Planar pose on the table: position in meters, yaw in radians.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Axis-aligned rectangle, [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  static Rect centered(double cx, double cy, double half_w, double half_h) {
    return {cx - half_w, cy - half_h, cx + half_w, cy + half_h};
  }

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }

  bool contains(const Rect& r) const { return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1; }

  Rect inflated(double m) const { return {x0 - m, y0 - m, x1 + m, y1 + m}; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Area of the intersection of two rectangles (0 when disjoint).
inline double intersection_area(const Rect& a, const Rect& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

/// True when the interiors overlap; touching edges do not count.
inline bool overlaps(const Rect& a, const Rect& b) { return intersection_area(a, b) > 0.0; }

}  // namespace tabletop
