#pragma once

#include "pivot/mesh.hpp"
#include "pivot/types.hpp"

namespace pivot {

/// Convex polytope with merged polygonal facets. Facet loops are counter-
/// clockwise when seen from outside; normals are outward unit vectors with
/// n·x = offset on the facet plane and n·x <= offset inside.
struct ConvexPolytope {
  MatX3 V;
  std::vector<std::vector<int>> facets;
  MatX3 normals;  // one row per facet
  VecX offsets;   // one entry per facet

  int num_vertices() const { return static_cast<int>(V.rows()); }
  int num_facets() const { return static_cast<int>(facets.size()); }
  Vec3 vertex(int i) const { return V.row(i).transpose(); }
  Real scale() const { return std::max<Real>(V.cwiseAbs().maxCoeff(), 1.0); }
  Real facet_area(int f) const;
  bool contains(const Vec3& p, Real tol = 1e-6) const;
  /// Euclidean distance from p to the solid polytope (0 when inside).
  Real distance(const Vec3& p) const;
};

/// Exact convex hull of a point set (incremental, with coplanar-facet
/// merging). Throws DegenerateMesh when the input is affinely dependent.
ConvexPolytope convex_hull(const MatX3& points);
inline ConvexPolytope convex_hull(const TriMesh& mesh) { return convex_hull(mesh.V); }

/// Triangulated copy (fan per facet), e.g. for collision tests.
TriMesh to_trimesh(const ConvexPolytope& poly, const Vec3& com);

/// Symmetric Hausdorff distance between two solid convex polytopes:
/// max over both directions of sup_x inf_y |x - y|. For convex bodies the
/// supremum is attained at a vertex, so this is exact.
Real hausdorff_distance(const ConvexPolytope& P, const ConvexPolytope& Q);

/// Reduce the vertex count by iterative vertex removal. Kept vertices are a
/// subset of the input's, and every removed vertex stays within `bound` of
/// some kept vertex — a stronger guarantee than the solid-body Hausdorff
/// bound, which it implies. Cannot go below 4 vertices; returns the input
/// unchanged when bound <= 0 or nothing can be removed.
ConvexPolytope simplify_mesh(const ConvexPolytope& hull, Real bound);

/// Max over the input's vertices of the distance to the nearest vertex of
/// `simplified` (the bound simplify_mesh enforces; test/diagnostic helper).
Real vertex_cloud_radius(const ConvexPolytope& original, const ConvexPolytope& simplified);

/// Candidate table-contact vertices of the simplified hull at a world pose:
/// all vertices within 2*d_H of the lowest one, each a ball of radius d_H.
/// The true contact point of the original shape lies in the union of the
/// balls provided d_H bounds the vertex-cloud radius of the simplification.
std::vector<std::pair<int, Real>> contact_candidates(const ConvexPolytope& simplified,
                                                     const Pose& pose, Real d_H);

}  // namespace pivot
