#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pivot/hull.hpp"
#include "pivot/mechanics.hpp"
#include "pivot/qp.hpp"

namespace pivot {

/// Gripper workspace: axis-aligned position box, tilt limit of the gripper Z
/// axis away from vertical, and the minimum fingertip height over the table.
struct WorkspaceLimits {
  Vec3 box_min{-150, -150, 0};
  Vec3 box_max{150, 150, 300};
  Real theta_max = deg2rad(60);
  Real table_clearance = 5.0;  // mm
};

/// Planner knobs. k regularizes the gripper-rotation objective toward the
/// upright pose; xi shapes the sliding-direction cone; mu is object-table
/// friction; the uncertainty radii widen the robust stability test.
struct PlannerConfig {
  Real k = 0.1;
  Real xi = 2.0;
  Real mu = 0.5;
  Real com_radius = 0.0;       // COM position uncertainty, mm
  Real pose_err = 0.0;         // pose estimate uncertainty, mm
  bool force_rolling = false;  // pick-and-place reduction: never pivot
};

/// One reorientation request to be executed with a single grasp.
struct ReorientTask {
  Pose initial;
  Pose goal;
  Grasp grasp;
  int N = 50;    // trajectory poses
  Real T = 0.2;  // seconds per step
};

enum class Mode { Pivoting, Rolling };
enum class SlideClass { S1, S2, S3 };  // sticking / toward-grasp cone / free

/// Stage at which planning failed, for diagnosability.
enum class PlanStage { None, WorkspaceRotation, EmptyAngleWindow, RotationQP, TranslationQP };

/// Per-step result. `mode`, `slide`, `contact_O` and the frame describe the
/// increment leading from this step to the next (the last step carries
/// placeholders).
struct StepPlan {
  int index = 0;
  Pose gripper;
  Mode mode = Mode::Rolling;
  SlideClass slide = SlideClass::S3;
  Real alpha = 0;  // gripper rotation from the frame Z about the grasp axis
  Vec3 contact_O = Vec3::Zero();
  PivotingPlaneFrame frame;
};

struct GraspPlan {
  std::vector<StepPlan> steps;
  Real path_length = 0;     // gripper translation, mm
  Real total_rotation = 0;  // gripper rotation, rad
  Real duration = 0;        // execution time at capped speeds, s
};

struct PlanResult {
  bool ok = false;
  PlanStage stage = PlanStage::None;
  std::string message;
  GraspPlan plan;
};

/// Object-level context shared by every grasp: the (possibly simplified)
/// hull used for contact prediction, its COM, and the contact-candidate ball
/// radius covering the simplification error.
struct ObjectModel {
  ConvexPolytope hull;
  Vec3 com = Vec3::Zero();
  Real d_H = 0;  // mm
};

/// Per-pose mechanics snapshot shared by planning and validation: support
/// vertex, aligned frame, planar configuration and robust bounds.
struct PoseMechanics {
  Vec3 contact_obj = Vec3::Zero();  // support vertex, object frame
  PivotingPlaneFrame frame;         // origin at the world support point
  PlanarConfig config;              // COM and grasp point in the pivoting plane
  UncertaintyBounds bounds;         // robust O_y / C_y / Q_y ranges
};

/// Assembles the mechanics snapshot of one posed grasp. Throws
/// DegenerateFrame / ConeDegenerate like the pieces it is built from.
PoseMechanics pose_mechanics(const Grasp& grasp, const Pose& obj_pose, const ObjectModel& obj,
                             const PlannerConfig& cfg);

/// Shortest-geodesic orientation interpolation with exact endpoints and a
/// constant per-step angle. N >= 2.
std::vector<Quat> slerp_trajectory(const Quat& qi, const Quat& qf, int N);

/// Half-aperture of the admissible gripper rotation about the grasp axis so
/// that the gripper Z stays within theta_max of vertical. Throws
/// EmptyIntersection when the axis itself is tilted beyond theta_max.
Real tilt_limit_in_plane(Real theta_max, const Vec3& grasp_axis_world);

/// Gripper orientation for rotation `alpha` about the frame X axis, applied
/// on top of the frame orientation.
Quat orientation_from_alpha(Real alpha, const PivotingPlaneFrame& frame);

/// Pivot when robustly stable, roll otherwise. One entry per trajectory step.
std::vector<Mode> choose_modes(const std::vector<PlanarConfig>& configs,
                               const std::vector<UncertaintyBounds>& bounds);

/// Pivoting-plane frame whose X axis points along the posed grasp axis
/// (never mirrored between steps), so step-to-step angle bookkeeping is
/// consistent along a trajectory.
PivotingPlaneFrame object_aligned_frame(const Grasp& grasp, const Pose& obj_pose,
                                        const Vec3& contact_O);

/// Gripper-rotation problem: per-step admissible windows and, on coupled
/// (rolling) increments, the equality alpha_{i+1} - alpha_i = beta_object_i.
struct RotationWindows {
  std::vector<Real> lo, hi;       // N entries
  std::vector<Real> beta_object;  // N-1 entries
  std::vector<bool> coupled;      // N-1 entries
};

/// Minimizes sum (alpha_{i+1}-alpha_i)^2 + k*|alpha|^2 subject to the
/// windows and coupling rows. nullopt when infeasible.
std::optional<VecX> gripper_rotation_qp(const RotationWindows& w, Real k);

/// Gripper-translation problem over the N-1 horizontal step velocities.
struct TranslationProblem {
  std::vector<SlideClass> slide;     // N-1
  std::vector<Vec2> delta_OQ;        // N-1: grasp-over-contact shift per step, mm
  std::vector<Vec2> oq_dir, ot_dir;  // N-1: unit contact-to-grasp / transverse
  Vec2 start_xy{0, 0}, final_xy{0, 0};
  Vec2 box_min{0, 0}, box_max{0, 0};
  Real T = 0.2;
  Real xi = 2.0;
};

/// Minimizes sum |v_i|^2 subject to sticking pins, sliding cones, the
/// workspace box at every intermediate position, and the exact terminal
/// position. nullopt when infeasible.
std::optional<std::vector<Vec2>> gripper_translation_qp(const TranslationProblem& tp);

/// Full one-grasp pipeline: SLERP, workspace checks, per-step mechanics and
/// windows, both QPs, and position integration. `collision_free` are the
/// grasp's precomputed object-frame clearance intervals.
PlanResult plan_one_grasp(const ReorientTask& task, const ObjectModel& obj,
                          const std::vector<AngleInterval>& collision_free,
                          const WorkspaceLimits& limits, const PlannerConfig& cfg);

}  // namespace pivot
