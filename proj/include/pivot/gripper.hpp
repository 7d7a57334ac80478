#pragma once

#include "pivot/mesh.hpp"
#include "pivot/types.hpp"

namespace pivot {

/// Collision geometry of a parallel-jaw gripper: two finger boxes flanking
/// the grasp axis plus a palm box bridging them. The gripper frame sits at
/// the midpoint between the fingertips, X along the grasp axis, Z toward the
/// palm. All lengths in mm.
struct GripperModel {
  Real stroke = 120;            // max distance between fingertip pads
  Real finger_width = 20;       // finger box extent along gripper Y
  Real finger_thickness = 15;   // finger box extent along gripper X
  Real finger_length = 60;      // fingertip plane to palm
  Real palm_width = 40;         // palm box extent along gripper Y
  Real palm_depth = 25;         // palm box extent along gripper Z
  Real tip_clearance = 5;       // min grasp-point height above the table
  Real contact_gap = 0.1;       // stand-off between finger face and object
  Real finger_mu = 0.8;         // finger-object friction (antipodal check)
};

/// Antipodal grasp: two surface points whose outward normals are nearly
/// opposite; the segment between them is the grasp/pivot axis.
struct Grasp {
  int id = -1;
  Vec3 p_left{0, 0, 0}, p_right{0, 0, 0};  // object frame
  Vec3 n_left{0, 0, 0}, n_right{0, 0, 0};  // outward facet normals

  Real width() const { return (p_right - p_left).norm(); }
  Vec3 axis() const { return (p_right - p_left).normalized(); }
  Vec3 midpoint() const { return 0.5 * (p_left + p_right); }
  /// Canonical unit vector perpendicular to the axis; zero reference for all
  /// angles measured about the grasp axis in the object frame.
  Vec3 ref_dir() const;
};

/// Angle of a direction w (not necessarily unit, must not parallel axis)
/// about `axis`, measured from `ref` counter-clockwise (right-hand rule).
Real angle_about_axis(const Vec3& axis, const Vec3& ref, const Vec3& w);

/// Oriented box: world point = R * local + center, |local| <= half.
struct Obb {
  Vec3 center{0, 0, 0};
  Mat3 R = Mat3::Identity();
  Vec3 half{0, 0, 0};
  Real max_corner_distance(const Vec3& line_point, const Vec3& line_dir) const;
  Real min_z() const;
};

/// The three gripper boxes for a grasp of width `width`, placed at `mid`
/// with grasp axis `axis` and palm direction `zdir` (unit, perpendicular).
std::array<Obb, 3> gripper_boxes(const GripperModel& g, Real width, const Vec3& mid,
                                 const Vec3& axis, const Vec3& zdir);

bool obb_intersects_triangle(const Obb& box, const Vec3& a, const Vec3& b, const Vec3& c);
bool gripper_intersects_mesh(const GripperModel& g, Real width, const Vec3& mid,
                             const Vec3& axis, const Vec3& zdir, const TriMesh& mesh,
                             Real inflate = 0);

/// Collision-free ranges of the gripper palm direction's angle about the
/// grasp axis, measured in the object frame from grasp.ref_dir(). Computed
/// by a dense angular sweep at step_deg resolution; each returned interval
/// is the union of cells around collision-free samples. Intervals are
/// normalized to [-pi, pi] (a fully free circle returns the single interval
/// [-pi, pi]).
std::vector<AngleInterval> collision_free_angles(const Grasp& grasp, const TriMesh& mesh,
                                                 const GripperModel& g, Real step_deg = 0.5);

struct GraspSamplingParams {
  int max_n = 50;
  Real antipodal_tol = deg2rad(10);
  Real trim_frac = 0.05;       // duplicate radius as a fraction of bbox diagonal
  Real min_width = 0.5;        // mm, rejects degenerate pairs
  Real interior_margin = 0.05; // barycentric distance from triangle border
  uint64_t seed = 1;
};

/// Rejection-samples antipodal grasps on the mesh surface; deterministic for
/// a fixed seed. Throws NoGraspFound when no antipodal pair fits the stroke.
std::vector<Grasp> sample_grasps(const TriMesh& mesh, const GripperModel& g,
                                 const GraspSamplingParams& params);

}  // namespace pivot
