#include "pivot/gripper.hpp"

#include <algorithm>

namespace pivot {

Vec3 Grasp::ref_dir() const {
  Vec3 a = axis();
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(a(i)) < std::abs(a(k))) k = i;
  Vec3 u = Vec3::Unit(k);
  return a.cross(u).normalized();
}

Real angle_about_axis(const Vec3& axis, const Vec3& ref, const Vec3& w) {
  Vec3 wp = w - w.dot(axis) * axis;
  return std::atan2(axis.dot(ref.cross(wp)), ref.dot(wp));
}

Real Obb::max_corner_distance(const Vec3& line_point, const Vec3& line_dir) const {
  Real best = 0;
  for (int s = 0; s < 8; ++s) {
    Vec3 local(half.x() * ((s & 1) ? 1 : -1), half.y() * ((s & 2) ? 1 : -1),
               half.z() * ((s & 4) ? 1 : -1));
    Vec3 p = R * local + center;
    Vec3 r = p - line_point;
    best = std::max(best, (r - r.dot(line_dir) * line_dir).norm());
  }
  return best;
}

Real Obb::min_z() const {
  Real z = center.z();
  for (int a = 0; a < 3; ++a) z -= std::abs(R(2, a)) * half(a);
  return z;
}

std::array<Obb, 3> gripper_boxes(const GripperModel& g, Real width, const Vec3& mid,
                                 const Vec3& axis, const Vec3& zdir) {
  Vec3 ydir = zdir.cross(axis);  // x cross y = z
  Mat3 R;
  R.col(0) = axis;
  R.col(1) = ydir;
  R.col(2) = zdir;
  const Real h = width / 2 + g.contact_gap;
  std::array<Obb, 3> boxes;
  // left finger
  boxes[0].R = R;
  boxes[0].half = Vec3(g.finger_thickness / 2, g.finger_width / 2, g.finger_length / 2);
  boxes[0].center = mid + R * Vec3(-h - g.finger_thickness / 2, 0, g.finger_length / 2);
  // right finger
  boxes[1] = boxes[0];
  boxes[1].center = mid + R * Vec3(h + g.finger_thickness / 2, 0, g.finger_length / 2);
  // palm
  boxes[2].R = R;
  boxes[2].half =
      Vec3(h + g.finger_thickness, g.palm_width / 2, g.palm_depth / 2);
  boxes[2].center = mid + R * Vec3(0, 0, g.finger_length + g.palm_depth / 2);
  return boxes;
}

bool obb_intersects_triangle(const Obb& box, const Vec3& a, const Vec3& b, const Vec3& c) {
  // classic 13-axis separating-axis test in the box frame
  Vec3 v0 = box.R.transpose() * (a - box.center);
  Vec3 v1 = box.R.transpose() * (b - box.center);
  Vec3 v2 = box.R.transpose() * (c - box.center);
  const Vec3& e = box.half;

  auto axis_separates = [&](const Vec3& ax) {
    Real p0 = ax.dot(v0), p1 = ax.dot(v1), p2 = ax.dot(v2);
    Real r = e.x() * std::abs(ax.x()) + e.y() * std::abs(ax.y()) + e.z() * std::abs(ax.z());
    Real lo = std::min({p0, p1, p2}), hi = std::max({p0, p1, p2});
    return lo > r || hi < -r;
  };

  for (int i = 0; i < 3; ++i)
    if (axis_separates(Vec3::Unit(i))) return false;

  Vec3 f0 = v1 - v0, f1 = v2 - v1, f2 = v0 - v2;
  Vec3 n = f0.cross(f1);
  if (n.squaredNorm() > 1e-24 && axis_separates(n)) return false;

  const Vec3 edges[3] = {f0, f1, f2};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec3 ax = Vec3::Unit(i).cross(edges[j]);
      if (ax.squaredNorm() < 1e-24) continue;
      if (axis_separates(ax)) return false;
    }
  return true;
}

bool gripper_intersects_mesh(const GripperModel& g, Real width, const Vec3& mid,
                             const Vec3& axis, const Vec3& zdir, const TriMesh& mesh,
                             Real inflate) {
  auto boxes = gripper_boxes(g, width, mid, axis, zdir);
  for (auto& box : boxes) {
    box.half.array() += inflate;
    // cheap AABB cull before the SAT
    Vec3 ext = box.R.cwiseAbs() * box.half;
    Vec3 lo = box.center - ext, hi = box.center + ext;
    for (int f = 0; f < mesh.num_triangles(); ++f) {
      Vec3 a = mesh.vertex(mesh.F(f, 0)), b = mesh.vertex(mesh.F(f, 1)),
           c = mesh.vertex(mesh.F(f, 2));
      Vec3 tlo = a.cwiseMin(b).cwiseMin(c), thi = a.cwiseMax(b).cwiseMax(c);
      if ((tlo.array() > hi.array()).any() || (thi.array() < lo.array()).any()) continue;
      if (obb_intersects_triangle(box, a, b, c)) return true;
    }
    // No surface crossing: the box may still sit fully inside the solid.
    // Odd ray-crossing parity from the box center means inside.
    Vec3 dir = Vec3(0.5715026151, 0.6012750247, 0.5585361089).normalized();
    if (ray_intersections(mesh, box.center, dir).size() % 2 == 1) return true;
  }
  return false;
}

std::vector<AngleInterval> collision_free_angles(const Grasp& grasp, const TriMesh& mesh,
                                                 const GripperModel& g, Real step_deg) {
  const Real step = deg2rad(step_deg);
  const int m = static_cast<int>(std::ceil(2 * kPi / step));
  const Vec3 axis = grasp.axis();
  const Vec3 ref = grasp.ref_dir();
  const Vec3 mid = grasp.midpoint();
  const Real width = grasp.width();

  std::vector<bool> free(m);
  for (int i = 0; i < m; ++i) {
    Real beta = -kPi + (i + 0.5) * step;
    Vec3 zdir = std::cos(beta) * ref + std::sin(beta) * axis.cross(ref);
    free[i] = !gripper_intersects_mesh(g, width, mid, axis, zdir, mesh);
  }

  if (std::none_of(free.begin(), free.end(), [](bool b) { return b; }))
    throw EmptyRange("gripper collides with the object at every angle");
  if (std::all_of(free.begin(), free.end(), [](bool b) { return b; }))
    return {AngleInterval{-kPi, kPi}};

  // maximal runs of free samples; each sample certifies +-step/2 around it
  std::vector<AngleInterval> out;
  auto flush = [&](int i0, int i1) {
    Real lo = -kPi + i0 * step;
    Real hi = std::min(kPi, -kPi + (i1 + 1) * step);
    out.push_back({lo, hi});
  };
  int run_start = -1;
  for (int i = 0; i < m; ++i) {
    if (free[i] && run_start < 0) run_start = i;
    if (!free[i] && run_start >= 0) {
      flush(run_start, i - 1);
      run_start = -1;
    }
  }
  if (run_start >= 0) flush(run_start, m - 1);
  // runs touching both ends stay split; both pieces are already in [-pi, pi]
  return out;
}

namespace {

bool barycentric_interior(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                          Real margin) {
  Vec3 v0 = b - a, v1 = c - a, v2 = p - a;
  Real d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  Real d20 = v2.dot(v0), d21 = v2.dot(v1);
  Real denom = d00 * d11 - d01 * d01;
  if (std::abs(denom) < 1e-18) return false;
  Real v = (d11 * d20 - d01 * d21) / denom;
  Real w = (d00 * d21 - d01 * d20) / denom;
  Real u = 1 - v - w;
  return u >= margin && v >= margin && w >= margin;
}

}  // namespace

std::vector<Grasp> sample_grasps(const TriMesh& mesh, const GripperModel& g,
                                 const GraspSamplingParams& params) {
  std::mt19937_64 rng(params.seed);
  const Real diag = mesh.bbox_diagonal();
  const Real dup_r = params.trim_frac * diag;
  const Real cone_half = std::atan(g.finger_mu);
  std::vector<Grasp> accepted;

  const long budget = 400L * std::max(params.max_n, 1);
  for (long trial = 0; trial < budget && static_cast<int>(accepted.size()) < params.max_n;
       ++trial) {
    auto [f1, p1] = sample_surface_point(mesh, rng, params.interior_margin);
    Vec3 n1 = mesh.triangle_normal(f1);
    Vec3 dir = -n1;
    auto hits = ray_intersections(mesh, p1 - 1e-6 * diag * n1, dir, 1e-6 * diag);
    int exit_hit = -1;
    for (int h = static_cast<int>(hits.size()) - 1; h >= 0; --h) {
      if (!hits[h].front_face) {
        exit_hit = h;
        break;
      }
    }
    if (exit_hit < 0) continue;
    const RayHit& hit = hits[exit_hit];
    Vec3 p2 = hit.point;
    Vec3 n2 = mesh.triangle_normal(hit.triangle);
    if (!barycentric_interior(p2, mesh.vertex(mesh.F(hit.triangle, 0)),
                              mesh.vertex(mesh.F(hit.triangle, 1)),
                              mesh.vertex(mesh.F(hit.triangle, 2)), params.interior_margin))
      continue;
    Real w = (p2 - p1).norm();
    if (w < params.min_width || w > g.stroke) continue;
    Real anti = std::acos(std::clamp<Real>(n1.dot(-n2), -1, 1));
    if (anti > params.antipodal_tol) continue;
    Vec3 d = (p2 - p1) / w;
    Real c1 = std::acos(std::clamp<Real>(d.dot(-n1), -1, 1));
    Real c2 = std::acos(std::clamp<Real>((-d).dot(-n2), -1, 1));
    if (c1 > cone_half || c2 > cone_half) continue;

    bool dup = false;
    for (const auto& a : accepted) {
      bool same = (a.p_left - p1).norm() <= dup_r && (a.p_right - p2).norm() <= dup_r;
      bool swapped = (a.p_left - p2).norm() <= dup_r && (a.p_right - p1).norm() <= dup_r;
      if (same || swapped) {
        dup = true;
        break;
      }
    }
    if (dup) continue;

    Grasp grasp;
    grasp.p_left = p1;
    grasp.p_right = p2;
    grasp.n_left = n1;
    grasp.n_right = n2;
    accepted.push_back(grasp);
  }
  if (accepted.empty())
    throw NoGraspFound("no antipodal pair within the gripper stroke");

  auto key = [](const Grasp& gr) {
    Vec3 a = gr.p_left, b = gr.p_right;
    auto less = [](const Vec3& x, const Vec3& y) {
      for (int i = 0; i < 3; ++i) {
        if (x(i) < y(i) - 1e-12) return true;
        if (x(i) > y(i) + 1e-12) return false;
      }
      return false;
    };
    if (less(b, a)) std::swap(a, b);
    return std::make_pair(a, b);
  };
  std::sort(accepted.begin(), accepted.end(), [&](const Grasp& x, const Grasp& y) {
    auto [ax, bx] = key(x);
    auto [ay, by] = key(y);
    for (int i = 0; i < 3; ++i) {
      if (ax(i) != ay(i)) return ax(i) < ay(i);
    }
    for (int i = 0; i < 3; ++i) {
      if (bx(i) != by(i)) return bx(i) < by(i);
    }
    return false;
  });
  for (size_t i = 0; i < accepted.size(); ++i) accepted[i].id = static_cast<int>(i);
  return accepted;
}

}  // namespace pivot
