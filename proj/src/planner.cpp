#include "pivot/planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace pivot {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

struct Seg {
  Real lo, hi;
};

/// Intersects the admissible-angle set {alpha : wrap(theta0 + alpha) free}
/// with [-beta_cone, beta_cone], merges the pieces, and returns the
/// connected component nearest alpha = 0 (containing it when possible).
std::optional<Seg> window_near_zero(const std::vector<AngleInterval>& free_set, Real theta0,
                                    Real beta_cone) {
  std::vector<Seg> segs;
  for (const auto& iv : free_set) {
    for (int k = -2; k <= 2; ++k) {
      Real l = std::max(iv.lo - theta0 + 2 * kPi * k, -beta_cone);
      Real h = std::min(iv.hi - theta0 + 2 * kPi * k, beta_cone);
      if (l <= h) segs.push_back({l, h});
    }
  }
  if (segs.empty()) return std::nullopt;
  std::sort(segs.begin(), segs.end(), [](const Seg& a, const Seg& b) { return a.lo < b.lo; });
  std::vector<Seg> merged;
  for (const auto& s : segs) {
    if (!merged.empty() && s.lo <= merged.back().hi + 1e-9)
      merged.back().hi = std::max(merged.back().hi, s.hi);
    else
      merged.push_back(s);
  }
  const Seg* best = &merged.front();
  Real best_d = kInf;
  for (const auto& s : merged) {
    Real d = s.lo > 0 ? s.lo : (s.hi < 0 ? -s.hi : 0);
    if (d < best_d) {
      best_d = d;
      best = &s;
    }
  }
  return *best;
}

Real rest_height_at(const ConvexPolytope& hull, const Quat& R) {
  Real mn = kInf;
  for (int i = 0; i < hull.num_vertices(); ++i)
    mn = std::min(mn, (R * hull.vertex(i)).z());
  return -mn;
}

}  // namespace

PoseMechanics pose_mechanics(const Grasp& grasp, const Pose& obj_pose, const ObjectModel& obj,
                             const PlannerConfig& cfg) {
  auto cands = contact_candidates(obj.hull, obj_pose, obj.d_H);
  Real best_z = kInf;
  int best_idx = cands.front().first;
  for (const auto& c : cands) {
    Real z = obj_pose.apply(obj.hull.vertex(c.first)).z();
    if (z < best_z) {
      best_z = z;
      best_idx = c.first;
    }
  }

  PoseMechanics pm;
  pm.contact_obj = obj.hull.vertex(best_idx);
  pm.frame = object_aligned_frame(grasp, obj_pose, obj_pose.apply(pm.contact_obj));
  pm.config.C = pm.frame.to_plane(obj_pose.apply(obj.com));
  pm.config.Q = pm.frame.to_plane(obj_pose.apply(grasp.midpoint()));
  pm.config.mu_eff = project_friction_cone(cfg.mu, pm.frame.tilt);
  pm.config.weight = 1.0;

  Real o_lo = kInf, o_hi = -kInf;
  for (const auto& c : cands) {
    Real y = pm.frame.to_plane(obj_pose.apply(obj.hull.vertex(c.first))).x();
    o_lo = std::min(o_lo, y);
    o_hi = std::max(o_hi, y);
  }
  pm.bounds.O_y = {o_lo - (obj.d_H + cfg.pose_err), o_hi + (obj.d_H + cfg.pose_err)};
  pm.bounds.C_y = {pm.config.C.x() - (cfg.com_radius + cfg.pose_err),
                   pm.config.C.x() + (cfg.com_radius + cfg.pose_err)};
  pm.bounds.Q_y = {pm.config.Q.x() - cfg.pose_err, pm.config.Q.x() + cfg.pose_err};
  return pm;
}

std::vector<Quat> slerp_trajectory(const Quat& qi, const Quat& qf, int N) {
  if (N < 2) throw std::invalid_argument("trajectory needs at least two poses");
  Quat a = qi.normalized();
  Quat b = qf.normalized();
  if (a.dot(b) < 0) b.coeffs() *= -1;  // shortest geodesic
  std::vector<Quat> out(N);
  out.front() = a;
  out.back() = b;
  for (int i = 1; i + 1 < N; ++i)
    out[i] = a.slerp(Real(i) / Real(N - 1), b).normalized();
  return out;
}

Real tilt_limit_in_plane(Real theta_max, const Vec3& grasp_axis_world) {
  if (!(theta_max > 0 && theta_max < kPi / 2))
    throw std::invalid_argument("tilt limit must lie in (0, pi/2)");
  Real nrm = grasp_axis_world.norm();
  if (!(nrm > 0)) throw std::invalid_argument("grasp axis must be nonzero");
  Real az = std::min<Real>(1, std::abs(grasp_axis_world.z()) / nrm);
  Real cos_phi = std::sqrt(std::max<Real>(0, 1 - az * az));
  Real ratio = cos_phi > 0 ? std::cos(theta_max) / cos_phi : kInf;
  if (ratio > 1 + 1e-12)
    throw EmptyIntersection("grasp axis tilts beyond the gripper limit");
  return std::acos(std::min<Real>(1, ratio));
}

Quat orientation_from_alpha(Real alpha, const PivotingPlaneFrame& frame) {
  return (Quat(Eigen::AngleAxis<Real>(alpha, frame.x_axis)) * frame.orientation).normalized();
}

PivotingPlaneFrame object_aligned_frame(const Grasp& grasp, const Pose& obj_pose,
                                        const Vec3& contact_O) {
  PivotingPlaneFrame f = pivoting_plane_frame(grasp, obj_pose, contact_O);
  if (f.x_axis.dot(obj_pose.rotate(grasp.axis())) < 0) {
    // Mirror X and Y so X follows the posed grasp axis; Z stays upward and
    // the frame stays right-handed.
    f.x_axis = -f.x_axis;
    f.y_axis = -f.y_axis;
    Mat3 R;
    R.col(0) = f.x_axis;
    R.col(1) = f.y_axis;
    R.col(2) = f.z_axis;
    f.orientation = Quat(R).normalized();
  }
  return f;
}

std::vector<Mode> choose_modes(const std::vector<PlanarConfig>& configs,
                               const std::vector<UncertaintyBounds>& bounds) {
  if (configs.size() != bounds.size()) throw DimensionMismatch("configs/bounds sizes differ");
  std::vector<Mode> out(configs.size(), Mode::Rolling);
  for (size_t i = 0; i < configs.size(); ++i)
    if (equilibrium_feasible(configs[i]).has_value() && is_pivot_stable_robust(bounds[i]))
      out[i] = Mode::Pivoting;
  return out;
}

std::optional<VecX> gripper_rotation_qp(const RotationWindows& w, Real k) {
  const int N = static_cast<int>(w.lo.size());
  if (N < 2 || w.hi.size() != w.lo.size() || w.beta_object.size() != size_t(N - 1) ||
      w.coupled.size() != size_t(N - 1))
    throw DimensionMismatch("rotation window sizes are inconsistent");
  if (k < 0) throw std::invalid_argument("regularizer must be nonnegative");
  for (int i = 0; i < N; ++i)
    if (w.lo[i] > w.hi[i]) return std::nullopt;

  MatX D = MatX::Zero(N - 1, N);
  for (int i = 0; i + 1 < N; ++i) {
    D(i, i) = -1;
    D(i, i + 1) = 1;
  }
  QProblemd p;
  p.H = 2 * (D.transpose() * D + k * MatX::Identity(N, N));
  p.c = VecX::Zero(N);
  int me = 0;
  for (bool c : w.coupled) me += c ? 1 : 0;
  p.A_eq = MatX::Zero(me, N);
  p.b_eq = VecX::Zero(me);
  for (int i = 0, r = 0; i + 1 < N; ++i) {
    if (!w.coupled[i]) continue;
    p.A_eq(r, i) = -1;
    p.A_eq(r, i + 1) = 1;
    p.b_eq(r) = w.beta_object[i];
    ++r;
  }
  p.lb = Eigen::Map<const VecX>(w.lo.data(), N);
  p.ub = Eigen::Map<const VecX>(w.hi.data(), N);

  QSolutiond s = solve(p);
  if (s.status != QPStatus::Optimal) return std::nullopt;
  return s.x;
}

std::optional<std::vector<Vec2>> gripper_translation_qp(const TranslationProblem& tp) {
  const int n = static_cast<int>(tp.slide.size());
  if (n < 1 || tp.delta_OQ.size() != size_t(n) || tp.oq_dir.size() != size_t(n) ||
      tp.ot_dir.size() != size_t(n))
    throw DimensionMismatch("translation problem sizes are inconsistent");
  if (!(tp.T > 0)) throw std::invalid_argument("step duration must be positive");

  std::vector<int> fcol(n, -1);
  std::vector<int> free_steps;
  for (int i = 0; i < n; ++i) {
    if (tp.slide[i] == SlideClass::S1) continue;
    fcol[i] = 2 * static_cast<int>(free_steps.size());
    free_steps.push_back(i);
  }
  const int nf = static_cast<int>(free_steps.size());

  std::vector<Vec2> v(n, Vec2::Zero());
  for (int i = 0; i < n; ++i)
    if (tp.slide[i] == SlideClass::S1) v[i] = tp.delta_OQ[i] / tp.T;

  if (nf == 0) {
    Vec2 pos = tp.start_xy;
    for (int i = 0; i < n; ++i) {
      pos += tp.T * v[i];
      if (pos.x() < tp.box_min.x() - 1e-9 || pos.x() > tp.box_max.x() + 1e-9 ||
          pos.y() < tp.box_min.y() - 1e-9 || pos.y() > tp.box_max.y() + 1e-9)
        return std::nullopt;
    }
    if ((pos - tp.final_xy).norm() > 1e-6) return std::nullopt;
    return v;
  }

  const int nv = 2 * nf;
  QProblemd p;
  p.H = 2 * MatX::Identity(nv, nv);
  p.c = VecX::Zero(nv);

  // Terminal position: start + sum of steps = final, exactly.
  p.A_eq = MatX::Zero(2, nv);
  Vec2 pinned_sum = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    if (fcol[i] >= 0) {
      p.A_eq(0, fcol[i]) = tp.T;
      p.A_eq(1, fcol[i] + 1) = tp.T;
    } else {
      pinned_sum += tp.T * v[i];
    }
  }
  p.b_eq = (tp.final_xy - tp.start_xy - pinned_sum);

  // Box rows for the position after every step, plus sliding cones.
  int n_cone = 0;
  for (int i = 0; i < n; ++i) n_cone += tp.slide[i] == SlideClass::S2 ? 2 : 0;
  p.A_in = MatX::Zero(4 * n + n_cone, nv);
  p.b_in = VecX::Zero(4 * n + n_cone);
  int r = 0;
  Vec2 const_pos = tp.start_xy;
  VecX cum = VecX::Zero(nv);  // column pattern of the running free-step sum
  for (int j = 0; j < n; ++j) {
    if (fcol[j] >= 0) {
      cum(fcol[j]) = tp.T;
      cum(fcol[j] + 1) = tp.T;
    } else {
      const_pos += tp.T * v[j];
    }
    for (int d = 0; d < 2; ++d) {
      for (int q = 0; q < nv; q += 2) {
        p.A_in(r, q + d) = cum(q + d);
        p.A_in(r + 1, q + d) = -cum(q + d);
      }
      p.b_in(r) = (d == 0 ? tp.box_min.x() : tp.box_min.y()) - const_pos(d);
      p.b_in(r + 1) = const_pos(d) - (d == 0 ? tp.box_max.x() : tp.box_max.y());
      r += 2;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (tp.slide[i] != SlideClass::S2) continue;
    Vec2 w0 = tp.delta_OQ[i] / tp.T;  // contact stays put when v equals this
    Vec2 a1 = tp.xi * tp.oq_dir[i] + tp.ot_dir[i];
    Vec2 a2 = tp.xi * tp.oq_dir[i] - tp.ot_dir[i];
    p.A_in(r, fcol[i]) = a1.x();
    p.A_in(r, fcol[i] + 1) = a1.y();
    p.b_in(r) = a1.dot(w0);
    ++r;
    p.A_in(r, fcol[i]) = a2.x();
    p.A_in(r, fcol[i] + 1) = a2.y();
    p.b_in(r) = a2.dot(w0);
    ++r;
  }

  QSolutiond s = solve(p);
  if (s.status != QPStatus::Optimal) return std::nullopt;
  for (int t = 0; t < nf; ++t) v[free_steps[t]] = Vec2(s.x(2 * t), s.x(2 * t + 1));
  return v;
}

PlanResult plan_one_grasp(const ReorientTask& task, const ObjectModel& obj,
                          const std::vector<AngleInterval>& collision_free,
                          const WorkspaceLimits& limits, const PlannerConfig& cfg) {
  if (task.N < 2) throw std::invalid_argument("task needs at least two trajectory poses");
  if (!(task.T > 0)) throw std::invalid_argument("step duration must be positive");
  if (!(limits.theta_max > 0 && limits.theta_max < kPi / 2))
    throw std::invalid_argument("tilt limit must lie in (0, pi/2)");
  if (obj.hull.num_vertices() < 4) throw std::invalid_argument("object hull is degenerate");

  const int N = task.N;
  const Vec3 Q_obj = task.grasp.midpoint();
  const Vec3 axis_obj = task.grasp.axis();
  const Vec3 ref_obj = task.grasp.ref_dir();

  PlanResult res;
  auto fail = [&res](PlanStage st, std::string msg) -> PlanResult& {
    res.ok = false;
    res.stage = st;
    res.message = std::move(msg);
    res.plan = GraspPlan{};
    return res;
  };

  // Both task poses must rest on the table for the contact model to apply.
  for (const Pose* tp : {&task.initial, &task.goal}) {
    Real rest = rest_height_at(obj.hull, tp->orientation);
    if (std::abs(tp->position.z() - rest) > 0.5)
      throw std::invalid_argument("task pose does not rest on the table");
  }

  std::vector<Quat> R = slerp_trajectory(task.initial.orientation, task.goal.orientation, N);

  std::vector<Real> zobj(N), zgrp(N), theta0(N);
  std::vector<Vec3> contact_obj(N);
  std::vector<PivotingPlaneFrame> frames(N);
  std::vector<PlanarConfig> configs(N);
  std::vector<UncertaintyBounds> bounds(N);
  RotationWindows w;
  w.lo.resize(N);
  w.hi.resize(N);
  w.beta_object.resize(N - 1);
  w.coupled.assign(N - 1, true);

  for (int i = 0; i < N; ++i) {
    zobj[i] = rest_height_at(obj.hull, R[i]);
    Pose pose{R[i], Vec3(0, 0, zobj[i])};

    PoseMechanics pm;
    try {
      pm = pose_mechanics(task.grasp, pose, obj, cfg);
    } catch (const DegenerateFrame& e) {
      return fail(PlanStage::WorkspaceRotation, e.what());
    } catch (const ConeDegenerate& e) {
      return fail(PlanStage::WorkspaceRotation, e.what());
    }
    contact_obj[i] = pm.contact_obj;
    frames[i] = pm.frame;
    configs[i] = pm.config;
    bounds[i] = pm.bounds;

    Real z_tip = std::min(pose.apply(task.grasp.p_left).z(), pose.apply(task.grasp.p_right).z());
    if (z_tip < limits.table_clearance - 1e-9)
      return fail(PlanStage::WorkspaceRotation, "fingertips drop below the table clearance");

    zgrp[i] = pose.apply(Q_obj).z();
    if (zgrp[i] < limits.box_min.z() - 1e-9 || zgrp[i] > limits.box_max.z() + 1e-9)
      return fail(PlanStage::WorkspaceRotation, "grasp height leaves the workspace box");

    Real beta_cone;
    try {
      beta_cone = tilt_limit_in_plane(limits.theta_max, frames[i].x_axis);
    } catch (const EmptyIntersection& e) {
      return fail(PlanStage::WorkspaceRotation, e.what());
    }

    theta0[i] = angle_about_axis(axis_obj, ref_obj, R[i].conjugate() * frames[i].z_axis);
    auto seg = window_near_zero(collision_free, theta0[i], beta_cone);
    if (!seg)
      return fail(PlanStage::EmptyAngleWindow,
                  "no collision-free gripper angle inside the tilt cone");
    w.lo[i] = seg->lo;
    w.hi[i] = seg->hi;

    if (!(configs[i].Q.y() > 0))
      return fail(PlanStage::WorkspaceRotation, "grasp point not above the table contact");
  }

  for (int i = 0; i + 1 < N; ++i) w.beta_object[i] = wrap_angle(theta0[i] - theta0[i + 1]);

  std::vector<Mode> pose_modes;
  if (cfg.force_rolling)
    pose_modes.assign(N, Mode::Rolling);
  else
    pose_modes = choose_modes(configs, bounds);
  std::vector<Mode> inc_modes(N - 1, Mode::Rolling);
  for (int i = 0; i + 1 < N; ++i)
    if (pose_modes[i] == Mode::Pivoting && pose_modes[i + 1] == Mode::Pivoting)
      inc_modes[i] = Mode::Pivoting;

  auto attempt = [&](const std::vector<Mode>& im) -> PlanResult {
    PlanResult out;
    auto afail = [&out](PlanStage st, std::string msg) -> PlanResult& {
      out.ok = false;
      out.stage = st;
      out.message = std::move(msg);
      return out;
    };

    RotationWindows rw = w;
    for (int i = 0; i + 1 < N; ++i) rw.coupled[i] = im[i] == Mode::Rolling;
    auto alpha = gripper_rotation_qp(rw, cfg.k);
    if (!alpha)
      return afail(PlanStage::RotationQP, "gripper rotation constraints are infeasible");

    std::vector<SlideClass> slide(N - 1, SlideClass::S3);
    std::vector<Vec2> dOQ(N - 1, Vec2::Zero()), oq(N - 1, Vec2::Zero()), ot(N - 1, Vec2::Zero());
    for (int i = 0; i + 1 < N; ++i) {
      Vec3 arm = Q_obj - contact_obj[i];
      dOQ[i] = ((R[i + 1] * arm) - (R[i] * arm)).head<2>();
      if (im[i] == Mode::Rolling) continue;  // a held object may slide freely

      Real qy = configs[i].Q.x();
      Vec2 dir = (qy >= 0 ? 1 : -1) * frames[i].y_axis.head<2>();
      oq[i] = dir;
      ot[i] = Vec2(dir.y(), -dir.x());
      Scenario sc = classify_scenario_conservative(configs[i]);
      if (sc == Scenario::II || sc == Scenario::VI) {
        slide[i] = SlideClass::S3;  // contact may slide either way
      } else if (sc == Scenario::I || sc == Scenario::V) {
        Real toward = (-dOQ[i]).dot(dir);  // proposed contact motion, toward-grasp part
        slide[i] = toward > 1e-6 ? SlideClass::S2 : SlideClass::S1;
      } else {
        slide[i] = SlideClass::S1;  // no admissible sliding: pin the contact
      }
    }

    TranslationProblem tp;
    tp.slide = slide;
    tp.delta_OQ = dOQ;
    tp.oq_dir = oq;
    tp.ot_dir = ot;
    tp.start_xy = task.initial.apply(Q_obj).head<2>();
    tp.final_xy = task.goal.apply(Q_obj).head<2>();
    tp.box_min = limits.box_min.head<2>();
    tp.box_max = limits.box_max.head<2>();
    tp.T = task.T;
    tp.xi = cfg.xi;
    auto vel = gripper_translation_qp(tp);
    if (!vel)
      return afail(PlanStage::TranslationQP, "gripper translation constraints are infeasible");

    GraspPlan plan;
    plan.steps.resize(N);
    Vec2 xy = tp.start_xy;
    for (int i = 0; i < N; ++i) {
      if (i > 0) xy += task.T * (*vel)[i - 1];
      StepPlan& sp = plan.steps[i];
      sp.index = i;
      sp.gripper = Pose{orientation_from_alpha((*alpha)(i), frames[i]),
                        Vec3(xy.x(), xy.y(), zgrp[i])};
      sp.mode = i + 1 < N ? im[i] : Mode::Rolling;
      sp.slide = i + 1 < N ? slide[i] : SlideClass::S3;
      sp.alpha = (*alpha)(i);
      Vec3 pobj = sp.gripper.position - R[i] * Q_obj;
      pobj.z() = zobj[i];
      sp.contact_O = Pose{R[i], pobj}.apply(contact_obj[i]);
      sp.frame = frames[i];
      sp.frame.origin = sp.contact_O;
    }
    for (int i = 0; i + 1 < N; ++i) {
      Real dp = (plan.steps[i + 1].gripper.position - plan.steps[i].gripper.position).norm();
      Real dr = orientation_distance(plan.steps[i].gripper.orientation,
                                     plan.steps[i + 1].gripper.orientation);
      plan.path_length += dp;
      plan.total_rotation += dr;
      plan.duration += std::max(dp / 100.0, dr / deg2rad(35));
    }
    out.ok = true;
    out.stage = PlanStage::None;
    out.plan = std::move(plan);
    return out;
  };

  PlanResult first = attempt(inc_modes);
  bool all_rolling = true;
  for (Mode m : inc_modes) all_rolling = all_rolling && m == Mode::Rolling;
  if (first.ok || all_rolling ||
      (first.stage != PlanStage::RotationQP && first.stage != PlanStage::TranslationQP))
    return first;

  PlanResult second = attempt(std::vector<Mode>(N - 1, Mode::Rolling));
  if (second.ok) {
    second.message = "planned with the all-rolling fallback";
    return second;
  }
  first.message += "; all-rolling fallback failed too";
  return first;
}

}  // namespace pivot
