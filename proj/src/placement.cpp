#include "pivot/placement.hpp"

namespace pivot {

Real convex_polygon_margin(const std::vector<Vec2>& poly, const Vec2& p) {
  Real margin = std::numeric_limits<Real>::max();
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    Vec2 e = b - a;
    Real len = e.norm();
    if (len < 1e-12) continue;
    // left of the edge is inside for a CCW polygon
    Real cross = e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x());
    margin = std::min(margin, cross / len);
  }
  return margin;
}

std::vector<StablePlacement> stable_placements(const ConvexPolytope& hull, const Vec3& com,
                                               Real support_margin) {
  std::vector<StablePlacement> out;
  const Real scale = hull.scale();
  const Vec3 down(0, 0, -1);
  for (int f = 0; f < hull.num_facets(); ++f) {
    if (hull.facet_area(f) < 1e-9 * scale * scale) continue;
    Vec3 n = hull.normals.row(f).transpose();
    Quat q = Quat::FromTwoVectors(n, down).normalized();

    StablePlacement sp;
    sp.facet = f;
    sp.rest_orientation = q;
    Real h = 0;
    for (int i : hull.facets[f]) {
      Vec3 w = q * hull.vertex(i);
      sp.support_polygon.push_back(w.head<2>());
      h += -w.z();
    }
    sp.rest_height = h / static_cast<Real>(hull.facets[f].size());

    // Facet loops are CCW from outside, i.e. CW seen from above once the
    // facet faces down; flip to CCW in the xy plane.
    Real area2 = 0;
    const auto& poly = sp.support_polygon;
    for (size_t i = 0; i < poly.size(); ++i) {
      Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
      area2 += a.x() * b.y() - b.x() * a.y();
    }
    if (area2 < 0) std::reverse(sp.support_polygon.begin(), sp.support_polygon.end());

    Vec2 com_xy = (q * com).head<2>();
    if (convex_polygon_margin(sp.support_polygon, com_xy) < support_margin) continue;
    sp.id = static_cast<int>(out.size());
    out.push_back(std::move(sp));
  }
  return out;
}

}  // namespace pivot
