#include "pivot/mesh.hpp"

#include <algorithm>

#include "pivot/hull.hpp"
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pivot {

Vec3 TriMesh::triangle_normal(int f) const {
  Vec3 a = vertex(F(f, 0)), b = vertex(F(f, 1)), c = vertex(F(f, 2));
  return (b - a).cross(c - a).normalized();
}

Real TriMesh::triangle_area(int f) const {
  Vec3 a = vertex(F(f, 0)), b = vertex(F(f, 1)), c = vertex(F(f, 2));
  return 0.5 * (b - a).cross(c - a).norm();
}

Real TriMesh::surface_area() const {
  Real s = 0;
  for (int f = 0; f < num_triangles(); ++f) s += triangle_area(f);
  return s;
}

Real TriMesh::volume() const {
  Real v = 0;
  for (int f = 0; f < num_triangles(); ++f) {
    Vec3 a = vertex(F(f, 0)), b = vertex(F(f, 1)), c = vertex(F(f, 2));
    v += a.dot(b.cross(c)) / 6.0;
  }
  return v;
}

void TriMesh::bounding_box(Vec3& lo, Vec3& hi) const {
  lo = V.colwise().minCoeff().transpose();
  hi = V.colwise().maxCoeff().transpose();
}

Real TriMesh::bbox_diagonal() const {
  Vec3 lo, hi;
  bounding_box(lo, hi);
  return (hi - lo).norm();
}

Vec3 uniform_com(const MatX3& V, const MatX3i& F) {
  Real vol = 0;
  Vec3 moment = Vec3::Zero();
  for (int f = 0; f < F.rows(); ++f) {
    Vec3 a = V.row(F(f, 0)), b = V.row(F(f, 1)), c = V.row(F(f, 2));
    Real tv = a.dot(b.cross(c)) / 6.0;
    vol += tv;
    moment += tv * (a + b + c) / 4.0;  // tetra centroid vs origin
  }
  if (std::abs(vol) < 1e-12)
    throw DegenerateMesh("zero enclosed volume, cannot compute center of mass");
  return moment / vol;
}

bool is_watertight(const MatX3i& F) {
  std::map<std::pair<int, int>, int> dir_count;
  for (int f = 0; f < F.rows(); ++f) {
    for (int e = 0; e < 3; ++e) {
      int u = F(f, e), v = F(f, (e + 1) % 3);
      dir_count[{u, v}]++;
    }
  }
  for (const auto& [edge, n] : dir_count) {
    if (n != 1) return false;
    auto rev = dir_count.find({edge.second, edge.first});
    if (rev == dir_count.end() || rev->second != 1) return false;
  }
  return true;
}

namespace {

// Weld vertices closer than tol; returns remap old->new and the new array.
MatX3 weld_vertices(const MatX3& V, Real tol, std::vector<int>& remap) {
  const int n = static_cast<int>(V.rows());
  remap.assign(n, -1);
  std::vector<Vec3> kept;
  // Grid hash would be faster, but corpus meshes are small.
  for (int i = 0; i < n; ++i) {
    Vec3 p = V.row(i).transpose();
    int found = -1;
    for (int j = 0; j < static_cast<int>(kept.size()); ++j) {
      if ((kept[j] - p).norm() <= tol) {
        found = j;
        break;
      }
    }
    if (found < 0) {
      kept.push_back(p);
      found = static_cast<int>(kept.size()) - 1;
    }
    remap[i] = found;
  }
  MatX3 W(kept.size(), 3);
  for (size_t i = 0; i < kept.size(); ++i) W.row(i) = kept[i].transpose();
  return W;
}

// Flip triangles until adjacent ones agree on edge direction; BFS per shell.
void orient_consistently(MatX3i& F) {
  const int nf = static_cast<int>(F.rows());
  std::map<std::pair<int, int>, std::vector<int>> edge_faces;  // undirected
  for (int f = 0; f < nf; ++f)
    for (int e = 0; e < 3; ++e) {
      int u = F(f, e), v = F(f, (e + 1) % 3);
      edge_faces[{std::min(u, v), std::max(u, v)}].push_back(f);
    }
  std::vector<int> state(nf, 0);  // 0 unvisited, 1 queued/visited
  auto has_directed = [&](int f, int u, int v) {
    for (int e = 0; e < 3; ++e)
      if (F(f, e) == u && F(f, (e + 1) % 3) == v) return true;
    return false;
  };
  for (int seed = 0; seed < nf; ++seed) {
    if (state[seed]) continue;
    std::vector<int> stack{seed};
    state[seed] = 1;
    while (!stack.empty()) {
      int f = stack.back();
      stack.pop_back();
      for (int e = 0; e < 3; ++e) {
        int u = F(f, e), v = F(f, (e + 1) % 3);
        for (int g : edge_faces[{std::min(u, v), std::max(u, v)}]) {
          if (g == f || state[g]) continue;
          // Consistent neighbors traverse the shared edge in opposite order.
          if (has_directed(g, u, v)) std::swap(F(g, 1), F(g, 2));
          state[g] = 1;
          stack.push_back(g);
        }
      }
    }
  }
}

}  // namespace

TriMesh make_mesh(const MatX3& V, const MatX3i& F, std::optional<Vec3> com_override) {
  if (V.rows() < 4) throw DegenerateMesh("fewer than 4 vertices");
  if (F.rows() < 4) throw DegenerateMesh("fewer than 4 triangles");
  for (int f = 0; f < F.rows(); ++f)
    for (int e = 0; e < 3; ++e)
      if (F(f, e) < 0 || F(f, e) >= V.rows())
        throw ParseError("triangle references vertex " + std::to_string(F(f, e) + 1) +
                         " of " + std::to_string(V.rows()));

  Real scale = std::max<Real>(V.cwiseAbs().maxCoeff(), 1.0);
  std::vector<int> remap;
  MatX3 W = weld_vertices(V, 1e-9 * scale, remap);

  // Drop degenerate triangles; complain if too many.
  std::vector<Eigen::Matrix<int, 1, 3>> faces;
  int dropped = 0;
  for (int f = 0; f < F.rows(); ++f) {
    int a = remap[F(f, 0)], b = remap[F(f, 1)], c = remap[F(f, 2)];
    Vec3 pa = W.row(a), pb = W.row(b), pc = W.row(c);
    Real area2 = (pb - pa).cross(pc - pa).norm();
    if (a == b || b == c || a == c || area2 < 1e-12 * scale * scale) {
      dropped++;
      continue;
    }
    faces.push_back({a, b, c});
  }
  if (dropped > F.rows() / 10)
    throw DegenerateMesh(std::to_string(dropped) + " of " + std::to_string(F.rows()) +
                         " triangles are zero-area");

  MatX3i G(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) G.row(i) = faces[i];

  orient_consistently(G);
  if (!is_watertight(G)) throw DegenerateMesh("mesh is not watertight after repair");

  TriMesh mesh;
  mesh.V = W;
  mesh.F = G;
  if (mesh.volume() < 0) {  // make normals outward
    for (int f = 0; f < mesh.F.rows(); ++f) std::swap(mesh.F(f, 1), mesh.F(f, 2));
  }
  mesh.com = com_override ? *com_override : uniform_com(mesh.V, mesh.F);
  if (com_override && !convex_hull(mesh).contains(mesh.com))
    throw ParseError("center of mass lies outside the convex hull");
  return mesh;
}

TriMesh parse_mesh(const std::string& text) {
  std::istringstream in(text);
  std::vector<Vec3> verts;
  std::vector<Eigen::Matrix<int, 1, 3>> faces;
  std::optional<Vec3> com;
  std::string line;
  int lineno = 0;
  static const std::set<std::string> ignored = {"vn", "vt", "s",  "o",
                                                "g",  "usemtl", "mtllib"};
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key[0] == '#') continue;
    auto fail = [&](const std::string& msg) {
      throw ParseError("line " + std::to_string(lineno) + ": " + msg);
    };
    if (key == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) fail("bad vertex");
      verts.push_back(p);
    } else if (key == "f") {
      std::string tok[3];
      if (!(ls >> tok[0] >> tok[1] >> tok[2])) fail("bad face");
      std::string extra;
      if (ls >> extra) fail("only triangles are supported");
      Eigen::Matrix<int, 1, 3> tri;
      for (int e = 0; e < 3; ++e) {
        // accept "i", "i/j", "i/j/k": the first field is the vertex index
        size_t slash = tok[e].find('/');
        std::string head = slash == std::string::npos ? tok[e] : tok[e].substr(0, slash);
        int idx = 0;
        try {
          idx = std::stoi(head);
        } catch (...) {
          fail("bad face index '" + tok[e] + "'");
        }
        if (idx < 0) fail("negative indices are not supported");
        tri(e) = idx - 1;  // 1-based
      }
      faces.push_back(tri);
    } else if (key == "com") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) fail("bad com");
      com = p;
    } else if (ignored.count(key)) {
      continue;
    } else {
      fail("unknown keyword '" + key + "'");
    }
  }
  if (verts.empty()) throw ParseError("no vertices");
  MatX3 V(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) V.row(i) = verts[i].transpose();
  MatX3i F(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) F.row(i) = faces[i];
  return make_mesh(V, F, com);
}

TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open mesh file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_mesh(buf.str());
  } catch (ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::pair<int, Vec3> sample_surface_point(const TriMesh& mesh, std::mt19937_64& rng,
                                          Real interior_margin) {
  std::vector<Real> cum(mesh.num_triangles());
  Real s = 0;
  for (int f = 0; f < mesh.num_triangles(); ++f) {
    s += mesh.triangle_area(f);
    cum[f] = s;
  }
  std::uniform_real_distribution<Real> uni(0, 1);
  Real pick = uni(rng) * s;
  int f = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin());
  f = std::min(f, mesh.num_triangles() - 1);
  Real u, v;
  do {
    u = uni(rng);
    v = uni(rng);
    if (u + v > 1) {
      u = 1 - u;
      v = 1 - v;
    }
  } while (u < interior_margin || v < interior_margin || 1 - u - v < interior_margin);
  Vec3 a = mesh.vertex(mesh.F(f, 0)), b = mesh.vertex(mesh.F(f, 1)),
       c = mesh.vertex(mesh.F(f, 2));
  return {f, a + u * (b - a) + v * (c - a)};
}

std::vector<RayHit> ray_intersections(const TriMesh& mesh, const Vec3& origin,
                                      const Vec3& dir, Real t_min) {
  std::vector<RayHit> hits;
  for (int f = 0; f < mesh.num_triangles(); ++f) {
    Vec3 a = mesh.vertex(mesh.F(f, 0)), b = mesh.vertex(mesh.F(f, 1)),
         c = mesh.vertex(mesh.F(f, 2));
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 p = dir.cross(e2);
    Real det = e1.dot(p);
    if (std::abs(det) < 1e-14) continue;
    Real inv = 1.0 / det;
    Vec3 s = origin - a;
    Real u = s.dot(p) * inv;
    if (u < -1e-10 || u > 1 + 1e-10) continue;
    Vec3 q = s.cross(e1);
    Real v = dir.dot(q) * inv;
    if (v < -1e-10 || u + v > 1 + 1e-10) continue;
    Real t = e2.dot(q) * inv;
    if (t <= t_min) continue;
    RayHit h;
    h.triangle = f;
    h.t = t;
    h.point = origin + t * dir;
    h.front_face = mesh.triangle_normal(f).dot(dir) < 0;
    hits.push_back(h);
  }
  std::sort(hits.begin(), hits.end(), [](const RayHit& x, const RayHit& y) { return x.t < y.t; });
  return hits;
}

TriMesh scale_to_extent(const TriMesh& mesh, Real target_extent) {
  Vec3 lo, hi;
  mesh.bounding_box(lo, hi);
  Real extent = (hi - lo).maxCoeff();
  if (extent <= 0) throw DegenerateMesh("empty bounding box");
  Real s = target_extent / extent;
  TriMesh out = mesh;
  for (int i = 0; i < out.num_vertices(); ++i)
    out.V.row(i) = (mesh.com + s * (mesh.vertex(i) - mesh.com)).transpose();
  return out;  // com is a fixed point of the scaling
}

}  // namespace pivot
