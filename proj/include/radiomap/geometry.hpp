#pragma once

#include <algorithm>
#include <cmath>

namespace radiomap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  double norm() const { return std::hypot(x, y); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool contains(const Vec2& p, double tol = 1e-9) const {
    return p.x >= x0 - tol && p.x <= x0 + width + tol && p.y >= y0 - tol &&
           p.y <= y0 + height + tol;
  }
};

/// Maps scene coordinates (meters) to the unit square and back.
struct CoordMap {
  Rect area;

  Vec2 normalize(const Vec2& p) const {
    const double u = (p.x - area.x0) / area.width;
    const double v = (p.y - area.y0) / area.height;
    return {std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
  }

  Vec2 denormalize(const Vec2& u) const {
    return {area.x0 + u.x * area.width, area.y0 + u.y * area.height};
  }
};

}  // namespace radiomap
