#include "pivot/hull.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace pivot {

Real ConvexPolytope::facet_area(int f) const {
  const auto& loop = facets[f];
  Vec3 a = vertex(loop[0]);
  Real area = 0;
  for (size_t i = 1; i + 1 < loop.size(); ++i)
    area += 0.5 * (vertex(loop[i]) - a).cross(vertex(loop[i + 1]) - a).norm();
  return area;
}

bool ConvexPolytope::contains(const Vec3& p, Real tol) const {
  Real t = tol * scale();
  for (int f = 0; f < num_facets(); ++f)
    if (normals.row(f).dot(p) > offsets(f) + t) return false;
  return true;
}

namespace {

Real point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  Real t = ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0;
  t = std::clamp<Real>(t, 0, 1);
  return (p - (a + t * ab)).norm();
}

Real point_facet_distance(const ConvexPolytope& poly, int f, const Vec3& p) {
  Vec3 n = poly.normals.row(f).transpose();
  Real h = n.dot(p) - poly.offsets(f);
  Vec3 proj = p - h * n;
  const auto& loop = poly.facets[f];
  bool inside = true;
  for (size_t i = 0; i < loop.size(); ++i) {
    Vec3 a = poly.vertex(loop[i]);
    Vec3 b = poly.vertex(loop[(i + 1) % loop.size()]);
    if ((b - a).cross(proj - a).dot(n) < 0) {
      inside = false;
      break;
    }
  }
  if (inside) return std::abs(h);
  Real best = std::numeric_limits<Real>::max();
  for (size_t i = 0; i < loop.size(); ++i) {
    Vec3 a = poly.vertex(loop[i]);
    Vec3 b = poly.vertex(loop[(i + 1) % loop.size()]);
    best = std::min(best, point_segment_distance(p, a, b));
  }
  return best;
}

}  // namespace

Real ConvexPolytope::distance(const Vec3& p) const {
  bool inside = true;
  for (int f = 0; f < num_facets(); ++f)
    if (normals.row(f).dot(p) > offsets(f)) {
      inside = false;
      break;
    }
  if (inside) return 0;
  // For an outside point the nearest boundary point lies on a facet whose
  // plane sees the point from outside, so facets with negative clearance
  // cannot be nearest and are skipped.
  Real best = std::numeric_limits<Real>::max();
  const Real slack = Real(1e-9) * scale();
  for (int f = 0; f < num_facets(); ++f) {
    if (normals.row(f).dot(p) - offsets(f) < -slack) continue;
    best = std::min(best, point_facet_distance(*this, f, p));
  }
  if (best == std::numeric_limits<Real>::max())
    for (int f = 0; f < num_facets(); ++f)
      best = std::min(best, point_facet_distance(*this, f, p));
  return best;
}

// ---------------------------------------------------------------------------
// Incremental convex hull with conflict lists, then coplanar-facet merging.
// ---------------------------------------------------------------------------

namespace {

struct HullFace {
  int v[3];
  Vec3 n;
  Real d;
  std::vector<int> conflicts;
  bool alive = true;
};

struct EdgeKey {
  int u, v;
  bool operator<(const EdgeKey& o) const { return u != o.u ? u < o.u : v < o.v; }
};

class IncrementalHull {
 public:
  explicit IncrementalHull(const MatX3& pts) : P(pts) {
    scale_ = std::max<Real>(P.cwiseAbs().maxCoeff(), 1.0);
    eps_ = 1e-8 * scale_;
  }

  void build() {
    init_simplex();
    std::vector<int> initial(P.rows());
    std::iota(initial.begin(), initial.end(), 0);
    assign_points(initial, all_face_ids());
    for (;;) {
      int f = -1;
      for (size_t i = 0; i < faces.size(); ++i)
        if (faces[i].alive && !faces[i].conflicts.empty()) {
          f = static_cast<int>(i);
          break;
        }
      if (f < 0) break;
      expand(f);
    }
  }

  std::vector<HullFace> live_faces() const {
    std::vector<HullFace> out;
    for (const auto& fc : faces)
      if (fc.alive) out.push_back(fc);
    return out;
  }

  Real eps() const { return eps_; }
  Real scale() const { return scale_; }

 private:
  const MatX3& P;
  Real scale_, eps_;
  std::vector<HullFace> faces;
  std::map<EdgeKey, int> edge_face;  // directed edge (u,v) -> face id

  Vec3 pt(int i) const { return P.row(i).transpose(); }

  std::vector<int> all_face_ids() const {
    std::vector<int> ids;
    for (size_t i = 0; i < faces.size(); ++i)
      if (faces[i].alive) ids.push_back(static_cast<int>(i));
    return ids;
  }

  int add_face(int a, int b, int c) {
    HullFace fc;
    fc.v[0] = a;
    fc.v[1] = b;
    fc.v[2] = c;
    Vec3 nn = (pt(b) - pt(a)).cross(pt(c) - pt(a));
    Real nl = nn.norm();
    fc.n = nl > 0 ? Vec3(nn / nl) : Vec3(0, 0, 1);
    fc.d = fc.n.dot(pt(a));
    faces.push_back(fc);
    int id = static_cast<int>(faces.size()) - 1;
    edge_face[{a, b}] = id;
    edge_face[{b, c}] = id;
    edge_face[{c, a}] = id;
    return id;
  }

  void init_simplex() {
    const int n = static_cast<int>(P.rows());
    if (n < 4) throw DegenerateMesh("need at least 4 points");
    int i0 = 0, i1 = 0;
    for (int i = 0; i < n; ++i) {
      if (P(i, 0) < P(i0, 0)) i0 = i;
      if (P(i, 0) > P(i1, 0)) i1 = i;
    }
    if ((pt(i1) - pt(i0)).norm() < eps_) {
      // all x equal; fall back to max pairwise among first axis-extremes
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < n; ++i) {
          if (P(i, a) < P(i0, a)) i0 = i;
          if (P(i, a) > P(i1, a)) i1 = i;
        }
      if ((pt(i1) - pt(i0)).norm() < eps_) throw DegenerateMesh("all points coincide");
    }
    int i2 = -1;
    Real best = eps_;
    Vec3 dir = (pt(i1) - pt(i0)).normalized();
    for (int i = 0; i < n; ++i) {
      Vec3 r = pt(i) - pt(i0);
      Real dist = (r - r.dot(dir) * dir).norm();
      if (dist > best) {
        best = dist;
        i2 = i;
      }
    }
    if (i2 < 0) throw DegenerateMesh("collinear input");
    Vec3 nrm = (pt(i1) - pt(i0)).cross(pt(i2) - pt(i0)).normalized();
    int i3 = -1;
    best = eps_;
    for (int i = 0; i < n; ++i) {
      Real dist = std::abs(nrm.dot(pt(i) - pt(i0)));
      if (dist > best) {
        best = dist;
        i3 = i;
      }
    }
    if (i3 < 0) throw DegenerateMesh("coplanar input");
    if (nrm.dot(pt(i3) - pt(i0)) > 0) std::swap(i1, i2);  // make i3 below (a,b,c)
    add_face(i0, i1, i2);
    add_face(i0, i2, i3);
    add_face(i2, i1, i3);
    add_face(i1, i0, i3);
  }

  void assign_points(const std::vector<int>& points, const std::vector<int>& face_ids) {
    for (int p : points) {
      for (int f : face_ids) {
        if (!faces[f].alive) continue;
        if (p == faces[f].v[0] || p == faces[f].v[1] || p == faces[f].v[2]) continue;
        if (faces[f].n.dot(pt(p)) - faces[f].d > eps_) {
          faces[f].conflicts.push_back(p);
          break;
        }
      }
    }
  }

  void expand(int f0) {
    // farthest conflict point of f0
    int apex = -1;
    Real best = -1;
    for (int p : faces[f0].conflicts) {
      Real h = faces[f0].n.dot(pt(p)) - faces[f0].d;
      if (h > best) {
        best = h;
        apex = p;
      }
    }
    // visible set via BFS over edge-neighbors
    std::set<int> visible{f0};
    std::vector<int> stack{f0};
    while (!stack.empty()) {
      int f = stack.back();
      stack.pop_back();
      const auto& fc = faces[f];
      for (int e = 0; e < 3; ++e) {
        int u = fc.v[e], v = fc.v[(e + 1) % 3];
        auto it = edge_face.find({v, u});
        if (it == edge_face.end()) continue;
        int g = it->second;
        if (!faces[g].alive || visible.count(g)) continue;
        if (faces[g].n.dot(pt(apex)) - faces[g].d > eps_) {
          visible.insert(g);
          stack.push_back(g);
        }
      }
    }
    // horizon: directed edges of visible faces whose twin is not visible
    std::vector<std::pair<int, int>> horizon;
    for (int f : visible) {
      const auto& fc = faces[f];
      for (int e = 0; e < 3; ++e) {
        int u = fc.v[e], v = fc.v[(e + 1) % 3];
        auto it = edge_face.find({v, u});
        if (it == edge_face.end() || !visible.count(it->second)) horizon.push_back({u, v});
      }
    }
    // orphaned conflict points
    std::vector<int> orphans;
    for (int f : visible) {
      for (int p : faces[f].conflicts)
        if (p != apex) orphans.push_back(p);
      faces[f].conflicts.clear();
      faces[f].alive = false;
      for (int e = 0; e < 3; ++e)
        edge_face.erase({faces[f].v[e], faces[f].v[(e + 1) % 3]});
    }
    std::vector<int> fresh;
    for (auto [u, v] : horizon) fresh.push_back(add_face(u, v, apex));
    assign_points(orphans, fresh);
  }
};

// Disjoint-set for coplanar merging.
struct DSU {
  std::vector<int> p;
  explicit DSU(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

}  // namespace

ConvexPolytope convex_hull(const MatX3& points) {
  IncrementalHull builder(points);
  builder.build();
  std::vector<HullFace> tris = builder.live_faces();
  const Real merge_n = 1e-8;                       // normal alignment
  const Real merge_d = 1e-6 * builder.scale();     // plane offset, mm

  // Union adjacent coplanar triangles.
  std::map<EdgeKey, int> owner;
  for (size_t i = 0; i < tris.size(); ++i)
    for (int e = 0; e < 3; ++e)
      owner[{tris[i].v[e], tris[i].v[(e + 1) % 3]}] = static_cast<int>(i);
  DSU dsu(static_cast<int>(tris.size()));
  for (size_t i = 0; i < tris.size(); ++i)
    for (int e = 0; e < 3; ++e) {
      auto it = owner.find({tris[i].v[(e + 1) % 3], tris[i].v[e]});
      if (it == owner.end()) continue;
      int j = it->second;
      if (tris[i].n.dot(tris[j].n) > 1 - merge_n && std::abs(tris[i].d - tris[j].d) < merge_d)
        dsu.unite(static_cast<int>(i), j);
    }

  std::map<int, std::vector<int>> groups;
  for (size_t i = 0; i < tris.size(); ++i) groups[dsu.find(static_cast<int>(i))].push_back(static_cast<int>(i));

  // Per group: boundary loop (fall back to raw triangles if chaining fails).
  std::vector<std::vector<int>> loops;
  std::vector<Vec3> loop_normals;
  for (const auto& [root, members] : groups) {
    std::set<int> mem(members.begin(), members.end());
    std::map<int, int> next;  // boundary successor
    bool ok = true;
    for (int t : members)
      for (int e = 0; e < 3; ++e) {
        int u = tris[t].v[e], v = tris[t].v[(e + 1) % 3];
        auto it = owner.find({v, u});
        bool boundary = it == owner.end() || !mem.count(dsu.find(it->second));
        if (boundary) {
          if (next.count(u)) ok = false;
          next[u] = v;
        }
      }
    Vec3 gn = Vec3::Zero();
    for (int t : members) {
      Vec3 a = points.row(tris[t].v[0]), b = points.row(tris[t].v[1]), c = points.row(tris[t].v[2]);
      gn += 0.5 * (b - a).cross(c - a);  // area-weighted
    }
    gn.normalize();
    std::vector<int> loop;
    if (ok && !next.empty()) {
      int start = next.begin()->first, cur = start;
      do {
        loop.push_back(cur);
        auto it = next.find(cur);
        if (it == next.end()) {
          ok = false;
          break;
        }
        cur = it->second;
      } while (cur != start && loop.size() <= next.size());
      if (loop.size() != next.size()) ok = false;
    } else {
      ok = false;
    }
    if (ok) {
      loops.push_back(loop);
      loop_normals.push_back(gn);
    } else {
      for (int t : members) {
        loops.push_back({tris[t].v[0], tris[t].v[1], tris[t].v[2]});
        loop_normals.push_back(tris[t].n);
      }
    }
  }

  // Reindex to the used vertex subset, keeping input order.
  std::set<int> used;
  for (const auto& l : loops) used.insert(l.begin(), l.end());
  std::map<int, int> remap;
  ConvexPolytope poly;
  poly.V.resize(used.size(), 3);
  int k = 0;
  for (int i : used) {
    remap[i] = k;
    poly.V.row(k++) = points.row(i);
  }
  poly.normals.resize(loops.size(), 3);
  poly.offsets.resize(loops.size());
  for (size_t f = 0; f < loops.size(); ++f) {
    std::vector<int> loop;
    for (int i : loops[f]) loop.push_back(remap[i]);
    poly.facets.push_back(loop);
    poly.normals.row(f) = loop_normals[f].transpose();
    Real d = 0;
    for (int i : loop) d += loop_normals[f].dot(poly.vertex(i));
    poly.offsets(f) = d / static_cast<Real>(loop.size());
  }
  return poly;
}

TriMesh to_trimesh(const ConvexPolytope& poly, const Vec3& com) {
  std::vector<Eigen::Matrix<int, 1, 3>> faces;
  for (const auto& loop : poly.facets)
    for (size_t i = 1; i + 1 < loop.size(); ++i)
      faces.push_back({loop[0], loop[i], loop[i + 1]});
  TriMesh mesh;
  mesh.V = poly.V;
  mesh.F.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) mesh.F.row(i) = faces[i];
  mesh.com = com;
  return mesh;
}

Real hausdorff_distance(const ConvexPolytope& P, const ConvexPolytope& Q) {
  Real h = 0;
  for (int i = 0; i < P.num_vertices(); ++i) h = std::max(h, Q.distance(P.vertex(i)));
  for (int i = 0; i < Q.num_vertices(); ++i) h = std::max(h, P.distance(Q.vertex(i)));
  return h;
}

Real vertex_cloud_radius(const ConvexPolytope& original, const ConvexPolytope& simplified) {
  Real r = 0;
  for (int i = 0; i < original.num_vertices(); ++i) {
    Real best = std::numeric_limits<Real>::max();
    for (int j = 0; j < simplified.num_vertices(); ++j)
      best = std::min(best, (original.vertex(i) - simplified.vertex(j)).norm());
    r = std::max(r, best);
  }
  return r;
}

namespace {

Real point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 n = (b - a).cross(c - a);
  Real nn = n.squaredNorm();
  if (nn > 0) {
    Vec3 q = p - (n.dot(p - a) / nn) * n;
    if ((b - a).cross(q - a).dot(n) >= 0 && (c - b).cross(q - b).dot(n) >= 0 &&
        (a - c).cross(q - c).dot(n) >= 0)
      return (p - q).norm();
  }
  return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c),
                   point_segment_distance(p, c, a)});
}

// Distance from p to the convex hull of a small point set (<= ~10 points):
// the nearest boundary point lies on a simplex of at most three of them.
Real point_cloud_hull_distance(const Vec3& p, const std::vector<Vec3>& pts) {
  Real best = std::numeric_limits<Real>::max();
  const int k = static_cast<int>(pts.size());
  for (int i = 0; i < k; ++i) {
    best = std::min(best, (p - pts[i]).norm());
    for (int j = i + 1; j < k; ++j) {
      best = std::min(best, point_segment_distance(p, pts[i], pts[j]));
      for (int l = j + 1; l < k; ++l)
        best = std::min(best, point_triangle_distance(p, pts[i], pts[j], pts[l]));
    }
  }
  return best;
}

}  // namespace

ConvexPolytope simplify_mesh(const ConvexPolytope& hull, Real bound) {
  if (bound <= 0 || hull.num_vertices() <= 4) return hull;

  // Greedy vertex decimation. A candidate removal is accepted only if the
  // exact one-sided Hausdorff error from the input stays within the bound;
  // since the decimated hull uses a subset of the input vertices, that error
  // is the largest distance from any input vertex to the decimated hull.
  ConvexPolytope current = hull;
  while (current.num_vertices() > 4) {
    const int m = current.num_vertices();

    // Cheap removal-cost estimate: distance from each vertex to the hull of
    // its facet neighbours (upper bound on the error its removal adds).
    std::vector<std::vector<int>> nbr(m);
    for (const auto& loop : current.facets) {
      const int L = static_cast<int>(loop.size());
      for (int i = 0; i < L; ++i) {
        nbr[loop[i]].push_back(loop[(i + 1) % L]);
        nbr[loop[i]].push_back(loop[(i + L - 1) % L]);
      }
    }
    std::vector<std::pair<Real, int>> order(m);
    for (int i = 0; i < m; ++i) {
      auto& ni = nbr[i];
      std::sort(ni.begin(), ni.end());
      ni.erase(std::unique(ni.begin(), ni.end()), ni.end());
      std::vector<Vec3> pts;
      pts.reserve(ni.size());
      for (int j : ni) pts.push_back(current.vertex(j));
      order[i] = {point_cloud_hull_distance(current.vertex(i), pts), i};
    }
    std::sort(order.begin(), order.end());

    bool committed = false;
    for (const auto& [est, cand] : order) {
      MatX3 pts(m - 1, 3);
      for (int i = 0, r = 0; i < m; ++i)
        if (i != cand) pts.row(r++) = current.V.row(i);
      ConvexPolytope next;
      try {
        next = convex_hull(pts);
      } catch (const DegenerateMesh&) {
        continue;
      }
      Real err = 0;
      for (int i = 0; i < hull.num_vertices() && err <= bound; ++i)
        err = std::max(err, next.distance(hull.vertex(i)));
      if (err <= bound) {
        current = std::move(next);
        committed = true;
        break;
      }
    }
    if (!committed) break;
  }
  return current;
}

std::vector<std::pair<int, Real>> contact_candidates(const ConvexPolytope& simplified,
                                                     const Pose& pose, Real d_H) {
  const int n = simplified.num_vertices();
  VecX z(n);
  for (int i = 0; i < n; ++i) z(i) = pose.apply(simplified.vertex(i)).z();
  Real az = z.minCoeff();
  Real tie = 1e-9 * simplified.scale();
  std::vector<std::pair<int, Real>> out;
  for (int i = 0; i < n; ++i)
    if (z(i) <= az + 2 * d_H + tie) out.push_back({i, d_H});
  return out;
}

}  // namespace pivot
