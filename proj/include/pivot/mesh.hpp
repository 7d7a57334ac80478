#pragma once

#include <optional>
#include <random>
#include <string>

#include "pivot/types.hpp"

namespace pivot {

/// Watertight triangle mesh, millimeters, object frame, outward-facing
/// triangles in counter-clockwise order.
struct TriMesh {
  MatX3 V;
  MatX3i F;
  Vec3 com{0, 0, 0};

  int num_vertices() const { return static_cast<int>(V.rows()); }
  int num_triangles() const { return static_cast<int>(F.rows()); }
  Vec3 vertex(int i) const { return V.row(i).transpose(); }
  Vec3 triangle_normal(int f) const;
  Real triangle_area(int f) const;
  Real surface_area() const;
  Real volume() const;
  void bounding_box(Vec3& lo, Vec3& hi) const;
  Real bbox_diagonal() const;
};

/// Parse the ASCII triangle format: `v x y z`, `f i j k` (1-based), optional
/// `com x y z`, `#` comments. Unknown keywords raise ParseError except the
/// usual inert OBJ ones (vn, vt, s, o, g, usemtl, mtllib), which are skipped.
/// After parsing, duplicate vertices are welded, zero-area triangles dropped,
/// winding made consistent and outward, and the COM computed from uniform
/// density unless the file stated one.
TriMesh load_mesh(const std::string& path);

/// Same as load_mesh but from an in-memory string (used heavily by tests).
TriMesh parse_mesh(const std::string& text);

/// Build a validated mesh from raw arrays (welds, orients, computes COM
/// unless com_override is given). Throws DegenerateMesh on unrepairable input.
TriMesh make_mesh(const MatX3& V, const MatX3i& F,
                  std::optional<Vec3> com_override = std::nullopt);

/// Uniform-density center of mass via signed tetrahedra. Requires a closed,
/// consistently oriented mesh.
Vec3 uniform_com(const MatX3& V, const MatX3i& F);

/// Every edge shared by exactly two triangles, once per direction.
bool is_watertight(const MatX3i& F);

/// Area-weighted random surface point; returns triangle index and point.
/// Barycentric coordinates are kept at least `interior_margin` away from the
/// triangle border so samples land on facet interiors.
std::pair<int, Vec3> sample_surface_point(const TriMesh& mesh, std::mt19937_64& rng,
                                          Real interior_margin = 0.05);

struct RayHit {
  int triangle = -1;
  Real t = 0;
  Vec3 point{0, 0, 0};
  bool front_face = false;  // true when the ray enters (hits the outside)
};

/// All intersections of ray origin + t*dir (t > t_min) with the mesh,
/// sorted by t ascending.
std::vector<RayHit> ray_intersections(const TriMesh& mesh, const Vec3& origin,
                                      const Vec3& dir, Real t_min = 1e-9);

/// Apply a uniform scale about the COM so the largest bounding-box extent
/// equals target_extent.
TriMesh scale_to_extent(const TriMesh& mesh, Real target_extent);

}  // namespace pivot
