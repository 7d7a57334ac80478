#include "pivot/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace pivot {

namespace {

/// Height of the lowest hull vertex under `pose`; optionally its index.
Real support_z(const ConvexPolytope& hull, const Pose& pose, int* idx = nullptr) {
  Real mn = std::numeric_limits<Real>::infinity();
  int best = 0;
  for (int i = 0; i < hull.num_vertices(); ++i) {
    Real z = pose.apply(hull.vertex(i)).z();
    if (z < mn) {
      mn = z;
      best = i;
    }
  }
  if (idx) *idx = best;
  return mn;
}

/// Rigid spin by `psi` about the line through `point` along `axis` (unit).
Pose spin_pose(const Vec3& axis, Real psi, const Vec3& point) {
  Quat R{Eigen::AngleAxis<Real>(psi, axis)};
  return Pose{R, point - R * point};
}

/// Spin about the grasp line that rests the transported object on the table:
/// some vertex touches z = 0 and none sinks below it. Every vertex's height
/// is a sinusoid in the spin, so all touch-down angles are enumerated
/// analytically and the admissible one nearest zero is returned. nullopt
/// when no spin reaches the table.
std::optional<Real> resting_spin(const Pose& base, const Vec3& axis_w, const Vec3& pivot_w,
                                 const ConvexPolytope& hull) {
  const int V = hull.num_vertices();
  // Height of vertex v after a spin by psi: c1*cos(psi) + c2*sin(psi) + e.
  std::vector<Real> c1(V), c2(V), e(V);
  for (int v = 0; v < V; ++v) {
    const Vec3 r = base.apply(hull.vertex(v)) - pivot_w;
    const Real ar = axis_w.dot(r);
    c1[v] = r.z() - axis_w.z() * ar;
    c2[v] = axis_w.cross(r).z();
    e[v] = pivot_w.z() + axis_w.z() * ar;
  }
  auto lowest_at = [&](Real psi) {
    const Real c = std::cos(psi), s = std::sin(psi);
    Real mn = std::numeric_limits<Real>::infinity();
    for (int v = 0; v < V; ++v) mn = std::min(mn, c1[v] * c + c2[v] * s + e[v]);
    return mn;
  };
  std::optional<Real> best;
  auto consider = [&](Real psi) {
    psi = wrap_angle(psi);
    if (lowest_at(psi) < -1e-7) return;  // another vertex would sink into the table
    if (!best || std::abs(psi) < std::abs(*best)) best = psi;
  };
  for (int v = 0; v < V; ++v) {
    const Real amp = std::hypot(c1[v], c2[v]);
    const Real d = -e[v];
    if (amp < 1e-12) continue;                             // vertex on the axis: height fixed
    if (std::abs(d) > amp * (1 + 1e-12) + 1e-9) continue;  // its circle misses the table
    const Real phi0 = std::atan2(c2[v], c1[v]);
    const Real off = std::acos(std::clamp(d / amp, Real(-1), Real(1)));
    consider(phi0 + off);
    consider(phi0 - off);
  }
  return best;
}

bool pose_finite(const Pose& p) {
  return p.position.allFinite() && p.orientation.coeffs().allFinite();
}

std::string fmt_mm(Real v) {
  std::ostringstream os;
  os << v << " mm";
  return os.str();
}

}  // namespace

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "None";
    case FailureReason::ContactLoss: return "ContactLoss";
    case FailureReason::StabilityViolation: return "StabilityViolation";
    case FailureReason::CouplingViolation: return "CouplingViolation";
    case FailureReason::StickingViolation: return "StickingViolation";
    case FailureReason::BoxViolation: return "BoxViolation";
    case FailureReason::TiltViolation: return "TiltViolation";
    case FailureReason::GoalMismatch: return "GoalMismatch";
    case FailureReason::ChainBreak: return "ChainBreak";
    case FailureReason::ModelMismatch: return "ModelMismatch";
  }
  return "?";
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  if (ok) {
    os << "validation: PASS (" << steps.size() << " steps reconstructed)";
    return os.str();
  }
  os << "validation: FAIL " << to_string(reason);
  if (segment >= 0) os << " at segment " << segment;
  if (step >= 0) os << (segment >= 0 ? "," : " at") << " step " << step;
  if (!detail.empty()) os << ": " << detail;
  return os.str();
}

ValidationReport validate_plan(const GraspPlan& plan, const Grasp& grasp, const Pose& initial,
                               const Pose& goal, const ObjectModel& obj,
                               const WorkspaceLimits& limits, const PlannerConfig& cfg,
                               const ValidationTolerances& tol) {
  ValidationReport rep;
  auto fail = [&rep](FailureReason r, int step, std::string d) -> ValidationReport& {
    rep.ok = false;
    rep.reason = r;
    rep.step = step;
    rep.detail = std::move(d);
    return rep;
  };

  const int N = static_cast<int>(plan.steps.size());
  if (N < 2) return fail(FailureReason::ModelMismatch, -1, "plan has fewer than two steps");
  for (int i = 0; i < N; ++i)
    if (!pose_finite(plan.steps[i].gripper))
      return fail(FailureReason::ModelMismatch, i, "non-finite gripper pose");
  if (!pose_finite(initial) || !pose_finite(goal))
    return fail(FailureReason::ModelMismatch, -1, "non-finite endpoint pose");

  const Vec3 Q_obj = grasp.midpoint();
  {
    const Real hold = (plan.steps.front().gripper.position - initial.apply(Q_obj)).norm();
    if (hold > 1e-6)
      return fail(FailureReason::ModelMismatch, 0,
                  "first gripper pose misses the grasp point by " + fmt_mm(hold));
  }

  // Gripper-side limits need no reconstruction: check every step up front.
  for (int i = 0; i < N; ++i) {
    const Pose& g = plan.steps[i].gripper;
    for (int d = 0; d < 3; ++d)
      if (g.position(d) < limits.box_min(d) - tol.box ||
          g.position(d) > limits.box_max(d) + tol.box)
        return fail(FailureReason::BoxViolation, i, "gripper leaves the workspace box");
    const Real cz = std::clamp((g.rotate(Vec3::UnitZ())).z(), Real(-1), Real(1));
    if (std::acos(cz) > limits.theta_max + tol.tilt)
      return fail(FailureReason::TiltViolation, i, "gripper tilts beyond the limit");
  }

  std::vector<Pose> objp(N);
  objp[0] = initial;
  {
    const Real z0 = support_z(obj.hull, objp[0]);
    if (std::abs(z0) > tol.contact)
      return fail(FailureReason::ContactLoss, 0, "initial pose floats at " + fmt_mm(z0));
  }
  rep.steps.push_back(StepRecord{0, objp[0], plan.steps[0].mode, plan.steps[0].slide});

  for (int i = 0; i + 1 < N; ++i) {
    const Pose& ga = plan.steps[i].gripper;
    const Pose& gb = plan.steps[i + 1].gripper;
    const Mode mode = plan.steps[i].mode;
    const SlideClass slide = plan.steps[i].slide;

    const Pose base = gb.compose(ga.inverse()).compose(objp[i]);
    const Vec3 axis_w = base.rotate(grasp.axis()).normalized();
    const Vec3 pivot_w = gb.position;

    int u_before = 0;
    support_z(obj.hull, objp[i], &u_before);

    Pose next = base;
    if (mode == Mode::Pivoting) {
      // The object spins freely about the grasp line and settles resting on
      // the table. Resting spins come in separated branches (an object can
      // settle onto either neighboring edge), so the gripper motion is
      // subdivided until the branch connected to the previous pose is the
      // unambiguous nearest root; the composed result is still an exact
      // member of the whole increment's spin family.
      const Real dr = orientation_distance(ga.orientation, gb.orientation);
      const Real dp = (gb.position - ga.position).norm();
      const int M = std::clamp(
          static_cast<int>(std::ceil(std::max(dr / deg2rad(0.5), dp / 0.5))), 1, 256);
      Pose cur = objp[i];
      bool lost = false;
      for (int m = 1; m <= M && !lost; ++m) {
        const Real t0 = Real(m - 1) / M;
        const Real t1 = Real(m) / M;
        const Pose g0{ga.orientation.slerp(t0, gb.orientation).normalized(),
                      ga.position + t0 * (gb.position - ga.position)};
        const Pose g1{ga.orientation.slerp(t1, gb.orientation).normalized(),
                      ga.position + t1 * (gb.position - ga.position)};
        const Pose mbase = g1.compose(g0.inverse()).compose(cur);
        const Vec3 maxis = mbase.rotate(grasp.axis()).normalized();
        auto psi = resting_spin(mbase, maxis, g1.position, obj.hull);
        if (!psi)
          lost = true;
        else
          cur = spin_pose(maxis, *psi, g1.position).compose(mbase);
      }
      if (lost)
        return fail(FailureReason::ContactLoss, i,
                    "no spin about the grasp axis reaches the table");
      next = cur;
    } else {
      // Rigid attachment; the residual spin that resting would still need
      // measures the coupling error.
      auto psi = resting_spin(base, axis_w, pivot_w, obj.hull);
      if (psi && std::abs(*psi) > tol.coupling) {
        std::ostringstream os;
        os << "object spins " << *psi << " rad against the grip";
        return fail(FailureReason::CouplingViolation, i, os.str());
      }
    }
    objp[i + 1] = next;

    const Real zn = support_z(obj.hull, next, nullptr);
    if (std::abs(zn) > tol.contact)
      return fail(FailureReason::ContactLoss, i + 1, "support vertex at " + fmt_mm(zn));

    if (mode == Mode::Pivoting) {
      for (const int s : {i, i + 1}) {
        try {
          const PoseMechanics pm = pose_mechanics(grasp, objp[s], obj, cfg);
          if (!(pm.config.Q.y() > 0) || !equilibrium_feasible(pm.config).has_value() ||
              !is_pivot_stable_robust(pm.bounds))
            return fail(FailureReason::StabilityViolation, s,
                        "pivoting increment is not robustly stable");
        } catch (const std::exception& e) {
          return fail(FailureReason::StabilityViolation, s, e.what());
        }
      }
      if (slide == SlideClass::S1) {
        const Vec3 u_pt = obj.hull.vertex(u_before);
        const Vec2 drift = (objp[i + 1].apply(u_pt) - objp[i].apply(u_pt)).head<2>();
        if (drift.norm() > tol.sticking)
          return fail(FailureReason::StickingViolation, i,
                      "pinned support vertex drifts " + fmt_mm(drift.norm()));
      }
    }
    rep.steps.push_back(StepRecord{i + 1, next, plan.steps[i + 1].mode, plan.steps[i + 1].slide});
  }

  const Real dp = (objp[N - 1].position - goal.position).norm();
  const Real dr = orientation_distance(objp[N - 1].orientation, goal.orientation);
  if (dp > tol.goal_pos || dr > tol.goal_rot) {
    std::ostringstream os;
    os << "final pose off by " << dp << " mm / " << dr << " rad";
    return fail(FailureReason::GoalMismatch, N - 1, os.str());
  }
  rep.ok = true;
  return rep;
}

ValidationReport validate_plan(const MultiStepPlan& plan, const std::vector<Grasp>& grasps,
                               const Pose& initial, const Pose& goal, const ObjectModel& obj,
                               const WorkspaceLimits& limits, const PlannerConfig& cfg,
                               const ValidationTolerances& tol) {
  ValidationReport rep;
  auto fail = [&rep](FailureReason r, int seg, int step, std::string d) -> ValidationReport& {
    rep.ok = false;
    rep.reason = r;
    rep.segment = seg;
    rep.step = step;
    rep.detail = std::move(d);
    return rep;
  };

  const int S = static_cast<int>(plan.segments.size());
  if (S == 0) return fail(FailureReason::ModelMismatch, -1, -1, "plan has no segments");

  for (int s = 0; s < S; ++s) {
    const SegmentPlan& seg = plan.segments[s];
    if (seg.grasp_index < 0 || seg.grasp_index >= static_cast<int>(grasps.size()))
      return fail(FailureReason::ModelMismatch, s, -1, "grasp index out of range");

    const Pose& want_start = (s == 0) ? initial : plan.segments[s - 1].goal_pose;
    const Real cp = (seg.start_pose.position - want_start.position).norm();
    const Real cr = orientation_distance(seg.start_pose.orientation, want_start.orientation);
    if (cp > tol.chain_pos || cr > tol.chain_rot) {
      std::ostringstream os;
      os << "segment start off by " << cp << " mm / " << cr << " rad";
      return fail(FailureReason::ChainBreak, s, -1, os.str());
    }

    ValidationReport sub = validate_plan(seg.plan, grasps[seg.grasp_index], seg.start_pose,
                                         seg.goal_pose, obj, limits, cfg, tol);
    rep.steps.insert(rep.steps.end(), sub.steps.begin(), sub.steps.end());
    if (!sub.ok) return fail(sub.reason, s, sub.step, std::move(sub.detail));
  }

  const Pose& end = plan.segments.back().goal_pose;
  const Real dp = (end.position - goal.position).norm();
  const Real dr = orientation_distance(end.orientation, goal.orientation);
  if (dp > tol.goal_pos || dr > tol.goal_rot) {
    std::ostringstream os;
    os << "last segment ends off the goal by " << dp << " mm / " << dr << " rad";
    return fail(FailureReason::GoalMismatch, S - 1, -1, os.str());
  }
  rep.ok = true;
  return rep;
}

}  // namespace pivot
