#include "pivot/mechanics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pivot {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

void check_config(const PlanarConfig& cfg) {
  if (!(cfg.Q.y() > 0)) throw std::invalid_argument("PlanarConfig: grasp point must be above the table");
  if (!(cfg.mu_eff > 0)) throw std::invalid_argument("PlanarConfig: friction coefficient must be positive");
  if (!(cfg.weight > 0)) throw std::invalid_argument("PlanarConfig: weight must be positive");
}

Real config_scale(const PlanarConfig& cfg) {
  return std::max({Real(1), cfg.C.cwiseAbs().maxCoeff(), cfg.Q.cwiseAbs().maxCoeff()});
}

// Intersects { f_y : a * f_y >= rhs } into [lo, hi]; returns false when the
// constraint is infeasible outright (a == 0 and rhs > 0).
bool clip_half_line(Real a, Real rhs, Real& lo, Real& hi) {
  if (a > 0) {
    lo = std::max(lo, rhs / a);
  } else if (a < 0) {
    hi = std::min(hi, rhs / a);
  } else if (rhs > 0) {
    return false;
  }
  return true;
}

enum class ConeSide { Inside, Outside, Boundary };

ConeSide cone_membership(const PlanarConfig& cfg, Real tol) {
  Real margin = cfg.mu_eff * cfg.Q.y() - std::abs(cfg.Q.x());
  if (margin > tol) return ConeSide::Inside;
  if (margin < -tol) return ConeSide::Outside;
  return ConeSide::Boundary;
}

Scenario classify(const PlanarConfig& cfg, bool conservative) {
  check_config(cfg);
  const Real tol = Real(1e-6) * config_scale(cfg);
  const Real s1 = cfg.Q.x() - cfg.C.x();  // Q_y - C_y
  const Real s2 = cfg.Q.x();              // Q_y - O_y with O at the origin
  const bool sign_tie = std::abs(s1) <= tol || std::abs(s2) <= tol;
  ConeSide side = cone_membership(cfg, tol);

  if (!conservative && (sign_tie || side == ConeSide::Boundary))
    throw BoundaryCase("scenario classification is within tie tolerance");

  // Conservative tie handling: an ambiguous stability product counts as
  // unstable; an ambiguous cone membership counts as the more restrictive
  // neighbor (inside for stable layouts, outside for unstable ones).
  const bool stable_product = !sign_tie && s1 * s2 > 0;
  if (stable_product) {
    bool inside = side != ConeSide::Outside;  // Boundary -> Inside
    if (inside) return s2 > 0 ? Scenario::I : Scenario::V;
    return s2 > 0 ? Scenario::II : Scenario::VI;
  }
  bool inside = side == ConeSide::Inside;  // Boundary -> Outside (-> IV)
  return inside ? Scenario::III : Scenario::IV;
}

}  // namespace

PivotingPlaneFrame pivoting_plane_frame(const Grasp& grasp, const Pose& obj_pose,
                                        const Vec3& contact_O) {
  Vec3 axis = obj_pose.rotate(grasp.axis()).normalized();
  // Canonical sign: prefer an upward-tilted axis; break horizontal ties
  // lexicographically so equal inputs always build the identical frame.
  if (axis.z() < -1e-12 ||
      (std::abs(axis.z()) <= 1e-12 &&
       (axis.x() < -1e-12 || (std::abs(axis.x()) <= 1e-12 && axis.y() < 0))))
    axis = -axis;

  Vec3 horiz = Vec3::UnitZ().cross(axis);
  Real s = horiz.norm();
  if (s < 1e-6) throw DegenerateFrame("grasp axis is vertical; pivoting plane undefined");

  PivotingPlaneFrame f;
  f.origin = contact_O;
  f.x_axis = axis;
  f.y_axis = horiz / s;
  f.z_axis = axis.cross(f.y_axis).normalized();
  Mat3 R;
  R.col(0) = f.x_axis;
  R.col(1) = f.y_axis;
  R.col(2) = f.z_axis;
  f.orientation = Quat(R).normalized();
  f.tilt = std::asin(std::min(Real(1), std::abs(axis.z())));
  return f;
}

Real project_friction_cone(Real mu, Real tilt) {
  if (!(mu > 0)) throw std::invalid_argument("friction coefficient must be positive");
  Real phi = std::abs(tilt);
  if (!(phi < kPi / 2) || std::tan(phi) >= Real(1) / mu)
    throw ConeDegenerate("plane tilt reaches the friction cone aperture");
  Real c = std::cos(phi), s = std::sin(phi);
  Real d = c * c - mu * mu * s * s;
  if (d <= 0) throw ConeDegenerate("plane tilt reaches the friction cone aperture");
  return mu / std::sqrt(d);
}

std::optional<Interval> equilibrium_feasible(const PlanarConfig& cfg) {
  check_config(cfg);
  const Real g = cfg.weight;
  const Real Qy = cfg.Q.x(), Qz = cfg.Q.y(), Cy = cfg.C.x();

  if (Qy == 0) {
    // Torque balance pins the tangential force; the normal force is free to
    // grow until the cone admits it, so equilibrium always exists.
    Real fy = Cy * g / Qz;
    return Interval{fy, fy};
  }

  // Torque balance about Q gives the reaction line f_z = m f_y + b; the
  // feasible f_y set is its intersection with the cone f_z >= |f_y| / mu'.
  const Real m = Qz / Qy;
  const Real b = (Real(1) - Cy / Qy) * g;
  Real lo = -kInf, hi = kInf;
  bool ok = clip_half_line(m - Real(1) / cfg.mu_eff, -b, lo, hi) &&
            clip_half_line(m + Real(1) / cfg.mu_eff, -b, lo, hi);
  if (!ok || lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

Scenario classify_scenario(const PlanarConfig& cfg) { return classify(cfg, false); }

Scenario classify_scenario_conservative(const PlanarConfig& cfg) { return classify(cfg, true); }

bool is_pivot_stable(const PlanarConfig& cfg) {
  check_config(cfg);
  return (cfg.Q.x() - cfg.C.x()) * cfg.Q.x() > 0;
}

bool is_pivot_stable_robust(const UncertaintyBounds& bounds) {
  if (bounds.O_y.empty() || bounds.C_y.empty() || bounds.Q_y.empty())
    throw std::invalid_argument("UncertaintyBounds: empty interval");
  Real oc_min = std::min(bounds.O_y.lo, bounds.C_y.lo);
  Real oc_max = std::max(bounds.O_y.hi, bounds.C_y.hi);
  return bounds.Q_y.lo > oc_max || bounds.Q_y.hi < oc_min;
}

ContactState predict_contact_state(const PlanarConfig& cfg, OMotion o_motion) {
  switch (classify_scenario(cfg)) {
    case Scenario::I:
    case Scenario::V:
      switch (o_motion) {
        case OMotion::TowardQ: return ContactState::Sliding;
        case OMotion::AwayFromQ: return ContactState::ImpossibleMotion;
        case OMotion::Static: return ContactState::SlidingOrSticking;
      }
      break;
    case Scenario::II:
    case Scenario::VI:
      switch (o_motion) {
        case OMotion::TowardQ:
        case OMotion::AwayFromQ: return ContactState::Sliding;
        case OMotion::Static: return ContactState::SlidingOrSticking;
      }
      break;
    case Scenario::III:
      // A force-dependent holding branch exists far from the origin, so a
      // static contact may stick; any driven motion of O loses equilibrium.
      switch (o_motion) {
        case OMotion::TowardQ:
        case OMotion::AwayFromQ: return ContactState::Unstable;
        case OMotion::Static: return ContactState::SlidingOrSticking;
      }
      break;
    case Scenario::IV: return ContactState::Unstable;
  }
  return ContactState::Unstable;  // unreachable
}

}  // namespace pivot
