#pragma once

#include <optional>

#include "pivot/gripper.hpp"
#include "pivot/types.hpp"

namespace pivot {

/// Closed interval on the real line; endpoints may be +-infinity.
struct Interval {
  Real lo = 0;
  Real hi = 0;
  Real width() const { return hi - lo; }
  bool contains(Real v, Real tol = 0) const { return v >= lo - tol && v <= hi + tol; }
  bool empty() const { return lo > hi; }
};

/// Right-handed frame whose X axis runs along the grasp axis. The YZ plane
/// ("pivoting plane") passes through the table contact point; Y lies in the
/// table plane and Z points as upward as the frame allows. All the planar
/// contact analysis below lives in (y, z) coordinates of this frame.
struct PivotingPlaneFrame {
  Vec3 origin = Vec3::Zero();  // contact point O, world mm
  Vec3 x_axis = Vec3::UnitX();
  Vec3 y_axis = Vec3::UnitY();
  Vec3 z_axis = Vec3::UnitZ();
  Quat orientation = Quat::Identity();  // world_from_frame
  Real tilt = 0;                        // angle of x_axis out of the table plane, rad

  Vec2 to_plane(const Vec3& p_world) const {
    Vec3 d = p_world - origin;
    return Vec2(y_axis.dot(d), z_axis.dot(d));
  }
  Vec3 from_plane(const Vec2& yz) const { return origin + yz.x() * y_axis + yz.y() * z_axis; }
};

/// Planar contact problem: contact point O at the origin, center of mass C,
/// grasp point Q, projected friction coefficient and in-plane weight.
struct PlanarConfig {
  Vec2 C = Vec2::Zero();  // (y, z) mm
  Vec2 Q = Vec2::Zero();  // (y, z) mm, Q.z > 0
  Real mu_eff = 0.5;
  Real weight = 1.0;  // in-plane gravity magnitude (force units)
};

enum class Scenario { I, II, III, IV, V, VI };

enum class OMotion { TowardQ, AwayFromQ, Static };

enum class ContactState { Sliding, Sticking, SlidingOrSticking, Unstable, ImpossibleMotion };

/// Table-contact parameter ranges used for robust stability under pose and
/// model uncertainty. All values are pivoting-plane y coordinates in mm.
struct UncertaintyBounds {
  Interval O_y{0, 0};
  Interval C_y{0, 0};
  Interval Q_y{0, 0};
};

/// Builds the pivoting-plane frame for a grasp on a posed object and a given
/// table contact point. Throws DegenerateFrame when the grasp axis is within
/// 1e-6 of vertical (no horizontal in-plane direction exists).
PivotingPlaneFrame pivoting_plane_frame(const Grasp& grasp, const Pose& obj_pose,
                                        const Vec3& contact_O);

/// Effective friction coefficient of the tabletop contact seen inside a
/// pivoting plane tilted by `tilt` radians out of the vertical. Equals `mu`
/// at zero tilt and grows with tilt; throws ConeDegenerate once
/// tan(tilt) >= 1/mu, where the projected constraint stops being a cone.
Real project_friction_cone(Real mu, Real tilt);

/// Feasible table-reaction tangential forces for static equilibrium, as an
/// interval of f_y (possibly unbounded or a singleton); nullopt when no
/// equilibrium force exists inside the friction cone.
std::optional<Interval> equilibrium_feasible(const PlanarConfig& cfg);

/// Classifies the (C, Q) layout into one of the six planar scenarios.
/// Decisive quantities within 1e-6 * (config scale) throw BoundaryCase.
Scenario classify_scenario(const PlanarConfig& cfg);

/// Like classify_scenario but resolves near-boundary configurations to the
/// more conservative neighbor (the one permitting fewer or no motions).
Scenario classify_scenario_conservative(const PlanarConfig& cfg);

/// Stability of the pivoting equilibrium: (Q_y - C_y) * (Q_y - O_y) > 0 with
/// O at the origin. Friction-independent.
bool is_pivot_stable(const PlanarConfig& cfg);

/// Robust variant over parameter intervals: every Q_y in its range must lie
/// strictly outside the hull of the O_y and C_y ranges, on one side.
bool is_pivot_stable_robust(const UncertaintyBounds& bounds);

/// Contact behavior at O when the rest of the object is driven so that O
/// would move toward Q, away from Q, or stay put.
ContactState predict_contact_state(const PlanarConfig& cfg, OMotion o_motion);

}  // namespace pivot
