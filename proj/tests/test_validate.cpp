#include <cmath>

#include <doctest.h>
#include "pivot/validate.hpp"
#include "support/test_meshes.hpp"

using namespace pivot;
using namespace testsup;

namespace {

Grasp face_grasp_x(Real half, Real y, Real z) {
  Grasp g;
  g.id = 0;
  g.p_left = Vec3(-half, y, z);
  g.p_right = Vec3(half, y, z);
  g.n_left = Vec3(-1, 0, 0);
  g.n_right = Vec3(1, 0, 0);
  return g;
}

Real rest_height(const ConvexPolytope& hull, const Quat& R) {
  Real mn = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < hull.num_vertices(); ++i) mn = std::min(mn, (R * hull.vertex(i)).z());
  return -mn;
}

Quat rot_x(Real deg) { return Quat(Eigen::AngleAxis<Real>(deg2rad(deg), Vec3::UnitX())); }
Quat rot_y(Real deg) { return Quat(Eigen::AngleAxis<Real>(deg2rad(deg), Vec3::UnitY())); }

struct SingleCase {
  ObjectModel obj;
  Grasp grasp;
  WorkspaceLimits limits;
  PlannerConfig cfg;
  ReorientTask task;
  GraspPlan plan;
};

/// Through-center grasp, 0 -> 90 degrees about X: a carried (all-rolling) plan.
SingleCase rolling_case() {
  SingleCase c;
  TriMesh mesh = make_cube(40);
  c.obj = ObjectModel{convex_hull(mesh), Vec3::Zero(), 0.0};
  c.grasp = face_grasp_x(20, 0, 0);
  auto windows = collision_free_angles(c.grasp, mesh, GripperModel{});
  c.task.initial = Pose{Quat::Identity(), Vec3(0, 0, 20)};
  c.task.goal = Pose{rot_x(90), Vec3(0, 0, 20)};
  c.task.grasp = c.grasp;
  c.task.N = 9;
  auto res = plan_one_grasp(c.task, c.obj, windows, c.limits, c.cfg);
  REQUIRE(res.ok);
  c.plan = res.plan;
  for (int i = 0; i + 1 < c.task.N; ++i) REQUIRE(c.plan.steps[i].mode == Mode::Rolling);
  return c;
}

/// Below-center grasp near the balance point, 40 -> 49 degrees: all-pivoting,
/// contact sliding toward the grasp.
SingleCase pivot_case() {
  SingleCase c;
  TriMesh mesh = make_cube(40);
  c.obj = ObjectModel{convex_hull(mesh), Vec3::Zero(), 0.0};
  c.grasp = face_grasp_x(20, 0, -5);
  auto windows = collision_free_angles(c.grasp, mesh, GripperModel{});
  c.task.initial = Pose{rot_x(40), Vec3(0, 0, rest_height(c.obj.hull, rot_x(40)))};
  c.task.goal = Pose{rot_x(49), Vec3(0, 0, rest_height(c.obj.hull, rot_x(49)))};
  c.task.grasp = c.grasp;
  c.task.N = 10;
  auto res = plan_one_grasp(c.task, c.obj, windows, c.limits, c.cfg);
  REQUIRE(res.ok);
  c.plan = res.plan;
  for (int i = 0; i + 1 < c.task.N; ++i) REQUIRE(c.plan.steps[i].mode == Mode::Pivoting);
  return c;
}

/// The reverse sweep with the goal placed where the sticking chain ends:
/// all-pivoting with pinned (S1) contacts.
SingleCase sticking_case() {
  SingleCase c;
  TriMesh mesh = make_cube(40);
  c.obj = ObjectModel{convex_hull(mesh), Vec3::Zero(), 0.0};
  c.grasp = face_grasp_x(20, 0, -5);
  auto windows = collision_free_angles(c.grasp, mesh, GripperModel{});
  c.task.initial = Pose{rot_x(49), Vec3(0, 0, rest_height(c.obj.hull, rot_x(49)))};
  c.task.goal = Pose{rot_x(40), Vec3(0, 0, rest_height(c.obj.hull, rot_x(40)))};
  Vec3 u(-20, -20, -20);  // support vertex of the cube over this sweep
  Vec3 shift = (c.task.initial.orientation * u) - (c.task.goal.orientation * u);
  c.task.goal.position += Vec3(shift.x(), shift.y(), 0);
  c.task.grasp = c.grasp;
  c.task.N = 10;
  auto res = plan_one_grasp(c.task, c.obj, windows, c.limits, c.cfg);
  REQUIRE(res.ok);
  c.plan = res.plan;
  for (int i = 0; i + 1 < c.task.N; ++i) {
    REQUIRE(c.plan.steps[i].mode == Mode::Pivoting);
    REQUIRE(c.plan.steps[i].slide == SlideClass::S1);
  }
  return c;
}

ValidationReport run(const SingleCase& c) {
  return validate_plan(c.plan, c.grasp, c.task.initial, c.task.goal, c.obj, c.limits, c.cfg);
}

}  // namespace

TEST_CASE("clean plans replay without violations") {
  for (SingleCase c : {rolling_case(), pivot_case(), sticking_case()}) {
    ValidationReport rep = run(c);
    INFO(rep.to_text());
    CHECK(rep.ok);
    CHECK(rep.reason == FailureReason::None);
    CHECK(rep.steps.size() == c.plan.steps.size());
    CHECK(rep.to_text().find("PASS") != std::string::npos);
    // the reconstruction ends on the goal pose
    const Pose& last = rep.steps.back().object;
    CHECK((last.position - c.task.goal.position).norm() < 1e-6);
    CHECK(orientation_distance(last.orientation, c.task.goal.orientation) < 1e-9);
  }
}

TEST_CASE("raising the gripper mid-pivot beyond reach loses the contact") {
  SingleCase c = pivot_case();
  c.plan.steps[5].gripper.position.z() += 60;
  ValidationReport rep = run(c);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::ContactLoss);
  CHECK(rep.step >= 4);
  CHECK(rep.to_text().find("ContactLoss") != std::string::npos);
}

TEST_CASE("labeling an unstable increment as pivoting is rejected") {
  SingleCase c = rolling_case();  // through-center grasp can never pivot robustly
  c.plan.steps[3].mode = Mode::Pivoting;
  ValidationReport rep = run(c);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::StabilityViolation);
  CHECK(rep.step >= 3);
}

TEST_CASE("extra gripper spin on a rolling increment breaks the coupling") {
  SingleCase c = rolling_case();
  const Quat extra(Eigen::AngleAxis<Real>(2e-4, Vec3::UnitX()));
  c.plan.steps[4].gripper.orientation = (extra * c.plan.steps[4].gripper.orientation).normalized();
  ValidationReport rep = run(c);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::CouplingViolation);
  CHECK(rep.step == 3);
}

TEST_CASE("horizontal drift during a sticking step is caught") {
  SingleCase c = sticking_case();
  c.plan.steps[5].gripper.position.x() += 0.01;
  ValidationReport rep = run(c);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::StickingViolation);
  CHECK(rep.step == 4);
}

TEST_CASE("leaving the workspace box is caught before any reconstruction") {
  SingleCase c = pivot_case();
  c.plan.steps[2].gripper.position.y() = c.limits.box_max.y() + 1;
  ValidationReport rep = run(c);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::BoxViolation);
  CHECK(rep.step == 2);
}

TEST_CASE("tilting the gripper beyond the limit is caught") {
  SingleCase c = pivot_case();
  c.plan.steps[2].gripper.orientation =
      Quat(Eigen::AngleAxis<Real>(c.limits.theta_max + 0.05, Vec3::UnitY()));
  ValidationReport rep = run(c);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::TiltViolation);
  CHECK(rep.step == 2);
}

TEST_CASE("a plan that ends off the goal is a goal mismatch") {
  SingleCase c = rolling_case();
  Pose wrong_goal = c.task.goal;
  wrong_goal.orientation =
      (Quat(Eigen::AngleAxis<Real>(1e-3, Vec3::UnitX())) * wrong_goal.orientation).normalized();
  ValidationReport rep =
      validate_plan(c.plan, c.grasp, c.task.initial, wrong_goal, c.obj, c.limits, c.cfg);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::GoalMismatch);
}

TEST_CASE("a gripper that does not hold the grasp is a model mismatch") {
  SingleCase c = rolling_case();
  c.plan.steps[0].gripper.position.x() += 0.5;
  ValidationReport rep = run(c);
  CHECK(!rep.ok);
  CHECK(rep.reason == FailureReason::ModelMismatch);
}

TEST_CASE("multi-step plans validate segment by segment") {
  TriMesh mesh = make_cube(40);
  GraphConfig gcfg;
  gcfg.sampling.max_n = 24;
  gcfg.sampling.seed = 7;
  OfflineData off = build_offline(mesh, gcfg);

  PlanQuery q;
  q.initial = Pose{Quat::Identity(), Vec3{0, 0, 20}};
  q.goal = Pose{rot_y(180), Vec3{0, 0, 20}};
  q.limits.theta_max = deg2rad(50);
  q.N = 25;

  SUBCASE("a pivoting flip replays cleanly") {
    auto mp = plan_online(q, off, gcfg);
    REQUIRE(mp.has_value());
    ValidationReport rep = validate_plan(*mp, off.grasps, q.initial, q.goal, off.object_model(),
                                         q.limits, q.planner);
    INFO(rep.to_text());
    CHECK(rep.ok);
  }

  SUBCASE("a pick-and-place flip replays cleanly and faults are localized") {
    q.planner.force_rolling = true;
    auto mp = plan_online(q, off, gcfg);
    REQUIRE(mp.has_value());
    REQUIRE(mp->segments.size() == 2);
    const ObjectModel obj = off.object_model();

    ValidationReport rep =
        validate_plan(*mp, off.grasps, q.initial, q.goal, obj, q.limits, q.planner);
    INFO(rep.to_text());
    CHECK(rep.ok);

    MultiStepPlan broken = *mp;
    broken.segments[1].start_pose.position.x() += 1.0;
    rep = validate_plan(broken, off.grasps, q.initial, q.goal, obj, q.limits, q.planner);
    CHECK(!rep.ok);
    CHECK(rep.reason == FailureReason::ChainBreak);
    CHECK(rep.segment == 1);

    MultiStepPlan wrong_idx = *mp;
    wrong_idx.segments[0].grasp_index = 999;
    rep = validate_plan(wrong_idx, off.grasps, q.initial, q.goal, obj, q.limits, q.planner);
    CHECK(!rep.ok);
    CHECK(rep.reason == FailureReason::ModelMismatch);
    CHECK(rep.segment == 0);

    MultiStepPlan bad_step = *mp;
    bad_step.segments[1].plan.steps[10].gripper.position.z() += 60;
    rep = validate_plan(bad_step, off.grasps, q.initial, q.goal, obj, q.limits, q.planner);
    CHECK(!rep.ok);
    CHECK(rep.segment == 1);
  }
}
