#pragma once

#include <algorithm>

#include "dgm/error.hpp"

namespace dgm {

// Axis-aligned box in normalized image coordinates.
template <typename Real>
struct Box {
  Real x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  bool valid() const {
    return x1 <= x2 && y1 <= y2 && x1 >= Real(0) && y1 >= Real(0) && x2 <= Real(1) &&
           y2 <= Real(1);
  }

  Real area() const { return (x2 - x1) * (y2 - y1); }

  bool operator==(const Box&) const = default;
};

// Intersection over union; 0 when the union has zero area.
template <typename Real>
Real iou(const Box<Real>& a, const Box<Real>& b) {
  check(a.valid() && b.valid(), "iou: invalid box");
  Real ix = std::max(Real(0), std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  Real iy = std::max(Real(0), std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  Real inter = ix * iy;
  Real uni = a.area() + b.area() - inter;
  if (uni <= Real(0)) return Real(0);
  return inter / uni;
}

}  // namespace dgm
