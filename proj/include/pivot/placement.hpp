#pragma once

#include "pivot/hull.hpp"

namespace pivot {

/// Resting configuration of the object on one hull facet.
struct StablePlacement {
  int id = -1;
  int facet = -1;
  Quat rest_orientation{1, 0, 0, 0};  // object->world, facet normal maps to -Z
  Real rest_height = 0;               // object origin z when resting on the table
  std::vector<Vec2> support_polygon;  // facet vertices in world xy at rest, CCW
};

/// Signed distance of p to the boundary of a CCW convex polygon; positive
/// inside, negative outside.
Real convex_polygon_margin(const std::vector<Vec2>& poly, const Vec2& p);

/// One placement per facet whose COM gravity projection lies at least
/// `support_margin` (mm) inside the support polygon. Facets with area below
/// 1e-9 * scale^2 are skipped as degenerate.
std::vector<StablePlacement> stable_placements(const ConvexPolytope& hull, const Vec3& com,
                                               Real support_margin = 1.0);

}  // namespace pivot
