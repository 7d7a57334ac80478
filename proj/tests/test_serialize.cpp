#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>
#include "pivot/serialize.hpp"
#include "pivot/validate.hpp"
#include "support/test_meshes.hpp"

using namespace pivot;
using namespace testsup;

namespace {

bool near(Real a, Real b, Real tol) { return std::abs(a - b) <= tol; }

std::string tmp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  REQUIRE(os.good());
  os << text;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

GraphConfig small_config(int max_grasps) {
  GraphConfig cfg;
  cfg.sampling.max_n = max_grasps;
  cfg.sampling.seed = 7;
  return cfg;
}

bool same_pose(const Pose& a, const Pose& b, Real tol = 1e-14) {
  return (a.position - b.position).norm() <= tol &&
         (a.orientation.coeffs() - b.orientation.coeffs()).norm() <= tol;
}

Quat rot_y(Real deg) { return Quat{Eigen::AngleAxis<Real>(deg2rad(deg), Vec3::UnitY())}; }

}  // namespace

TEST_CASE("offline cache round-trips every table exactly") {
  TriMesh mesh = make_cube(40);
  GraphConfig cfg = small_config(12);
  OfflineData off = build_offline(mesh, cfg);
  const std::string path = tmp_file("pivot_cache_roundtrip.json");

  save_offline_cache(path, off);
  OfflineData in = load_offline_cache(path);

  CHECK(in.mesh_hash == off.mesh_hash);
  CHECK(in.d_H == off.d_H);
  CHECK((in.com - off.com).norm() == 0);

  REQUIRE(in.hull.V.rows() == off.hull.V.rows());
  CHECK((in.hull.V - off.hull.V).norm() == 0);
  CHECK(in.hull.facets == off.hull.facets);
  CHECK((in.hull.normals - off.hull.normals).norm() == 0);
  CHECK((in.hull.offsets - off.hull.offsets).norm() == 0);

  REQUIRE(in.grasps.size() == off.grasps.size());
  for (size_t i = 0; i < off.grasps.size(); ++i) {
    CHECK(in.grasps[i].id == off.grasps[i].id);
    CHECK((in.grasps[i].p_left - off.grasps[i].p_left).norm() == 0);
    CHECK((in.grasps[i].p_right - off.grasps[i].p_right).norm() == 0);
    CHECK((in.grasps[i].n_left - off.grasps[i].n_left).norm() == 0);
    CHECK((in.grasps[i].n_right - off.grasps[i].n_right).norm() == 0);
  }

  REQUIRE(in.clearance.size() == off.clearance.size());
  for (size_t i = 0; i < off.clearance.size(); ++i) {
    REQUIRE(in.clearance[i].size() == off.clearance[i].size());
    for (size_t k = 0; k < off.clearance[i].size(); ++k) {
      CHECK(in.clearance[i][k].lo == off.clearance[i][k].lo);
      CHECK(in.clearance[i][k].hi == off.clearance[i][k].hi);
    }
  }

  REQUIRE(in.placements.size() == off.placements.size());
  for (size_t i = 0; i < off.placements.size(); ++i) {
    const StablePlacement& a = in.placements[i];
    const StablePlacement& b = off.placements[i];
    CHECK(a.id == b.id);
    CHECK(a.facet == b.facet);
    CHECK((a.rest_orientation.coeffs() - b.rest_orientation.coeffs()).norm() <= 1e-14);
    CHECK(a.rest_height == b.rest_height);
    REQUIRE(a.support_polygon.size() == b.support_polygon.size());
    for (size_t k = 0; k < b.support_polygon.size(); ++k)
      CHECK((a.support_polygon[k] - b.support_polygon[k]).norm() == 0);
  }

  CHECK(in.feasible == off.feasible);
  CHECK(in.adjacency == off.adjacency);
  std::filesystem::remove(path);
}

TEST_CASE("cache loader rejects missing, foreign and inconsistent files") {
  CHECK_THROWS_AS(load_offline_cache(tmp_file("pivot_no_such_cache.json")), IOError);

  const std::string path = tmp_file("pivot_bad_cache.json");
  write_text(path, "{\"format\": \"something-else\", \"version\": 1}");
  CHECK_THROWS_AS(load_offline_cache(path), ParseError);

  write_text(path, "{ not json at all");
  CHECK_THROWS_AS(load_offline_cache(path), ParseError);

  // A real cache with one clearance list removed no longer matches its grasps.
  TriMesh mesh = make_cube(40);
  OfflineData off = build_offline(mesh, small_config(8));
  save_offline_cache(path, off);
  nlohmann::json j = nlohmann::json::parse(read_text(path));
  CHECK(j.at("version").get<int>() == 1);
  j["clearance"].erase(0);
  write_text(path, j.dump());
  CHECK_THROWS_AS(load_offline_cache(path), ParseError);

  j["clearance"] = nlohmann::json::array();
  j["version"] = 99;
  write_text(path, j.dump());
  CHECK_THROWS_AS(load_offline_cache(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("graph config: empty object keeps defaults, keys override in place") {
  const std::string path = tmp_file("pivot_graph_config.json");
  write_text(path, "{}");
  GraphConfig def = load_graph_config(path);
  GraphConfig ref;
  CHECK(def.gripper.stroke == ref.gripper.stroke);
  CHECK(def.sampling.max_n == ref.sampling.max_n);
  CHECK(def.simplify_bound == ref.simplify_bound);
  CHECK(def.regrasp_clearance == ref.regrasp_clearance);

  write_text(path, R"({
    "gripper": {"stroke": 80, "tip_clearance": 7.5},
    "sampling": {"max_n": 16, "antipodal_tol_deg": 5, "seed": 3},
    "angle_step_deg": 1.0,
    "regrasp_clearance": 25
  })");
  GraphConfig cfg = load_graph_config(path);
  CHECK(cfg.gripper.stroke == 80);
  CHECK(cfg.gripper.tip_clearance == 7.5);
  CHECK(cfg.gripper.finger_width == ref.gripper.finger_width);
  CHECK(cfg.sampling.max_n == 16);
  CHECK(near(cfg.sampling.antipodal_tol, deg2rad(5), 1e-15));
  CHECK(cfg.sampling.seed == 3);
  CHECK(cfg.angle_step_deg == 1.0);
  CHECK(cfg.regrasp_clearance == 25);
  CHECK(cfg.support_margin == ref.support_margin);
  std::filesystem::remove(path);
}

TEST_CASE("plan query: poses required, angles in degrees, quaternions normalized") {
  const std::string path = tmp_file("pivot_query.json");
  write_text(path, R"({
    "initial": {"orientation": [2, 0, 0, 0], "position": [10, -20, 20]},
    "goal":    {"orientation": [0, 0, 1, 0], "position": [0, 0, 20]},
    "limits":  {"box_min": [-100, -100, 0], "box_max": [100, 100, 200],
                "theta_max_deg": 45, "table_clearance": 3},
    "planner": {"mu": 0.3, "force_rolling": true},
    "n_steps": 30,
    "step_time": 0.1
  })");
  PlanQuery q = load_plan_query(path);
  CHECK(near((q.initial.orientation.coeffs() - Quat::Identity().coeffs()).norm(), 0, 1e-15));
  CHECK((q.initial.position - Vec3{10, -20, 20}).norm() == 0);
  CHECK(near(std::abs(q.goal.orientation.y()), 1.0, 1e-15));
  CHECK((q.limits.box_max - Vec3{100, 100, 200}).norm() == 0);
  CHECK(near(q.limits.theta_max, deg2rad(45), 1e-15));
  CHECK(q.limits.table_clearance == 3);
  CHECK(q.planner.mu == 0.3);
  CHECK(q.planner.force_rolling);
  CHECK(q.planner.k == PlannerConfig{}.k);
  CHECK(q.N == 30);
  CHECK(q.T == 0.1);

  write_text(path, R"({"initial": {"orientation": [1,0,0,0], "position": [0,0,0]}})");
  CHECK_THROWS_AS(load_plan_query(path), ParseError);

  write_text(path, R"({
    "initial": {"orientation": [1,0,0,0], "position": [0,0,0]},
    "goal":    {"orientation": [1,0,0,0], "position": [0,0,0]},
    "n_steps": 1
  })");
  CHECK_THROWS_AS(load_plan_query(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("bench config: nested sections parsed, degenerate sweeps rejected") {
  const std::string path = tmp_file("pivot_bench_config.json");
  write_text(path, R"({
    "seed": 9,
    "problems_per_object": 2,
    "theta_max_deg": [20, 40],
    "n_steps": 12,
    "target_extent": 50,
    "planner": {"xi": 3},
    "graph": {"sampling": {"max_n": 8}}
  })");
  BenchConfig cfg = load_bench_config(path);
  CHECK(cfg.seed == 9);
  CHECK(cfg.problems_per_object == 2);
  CHECK(cfg.theta_max_deg == std::vector<Real>{20, 40});
  CHECK(cfg.n_steps == 12);
  CHECK(cfg.target_extent == 50);
  CHECK(cfg.planner.xi == 3);
  CHECK(cfg.graph.sampling.max_n == 8);
  CHECK(cfg.step_time == BenchConfig{}.step_time);

  write_text(path, R"({"theta_max_deg": []})");
  CHECK_THROWS_AS(load_bench_config(path), ParseError);
  write_text(path, R"({"problems_per_object": 0})");
  CHECK_THROWS_AS(load_bench_config(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("plan files round-trip and the reloaded plan still validates") {
  // The forced-rolling cube flip exercises everything a plan file stores:
  // two segments, an intermediate placement, and four regrasp waypoints.
  TriMesh mesh = make_cube(40);
  GraphConfig gcfg = small_config(24);
  OfflineData off = build_offline(mesh, gcfg);

  PlanQuery q;
  q.initial = Pose{Quat::Identity(), Vec3{0, 0, 20}};
  q.goal = Pose{rot_y(180), Vec3{0, 0, 20}};
  q.limits.theta_max = deg2rad(50);
  q.planner.force_rolling = true;
  q.N = 25;

  auto mp = plan_online(q, off, gcfg);
  REQUIRE(mp.has_value());
  REQUIRE(mp->segments.size() == 2);

  PlanFileMeta meta;
  meta.mesh_hash = off.mesh_hash;
  meta.limits = q.limits;
  meta.planner = q.planner;
  meta.step_time = q.T;
  meta.num_placements = static_cast<int>(off.placements.size());
  for (const SegmentPlan& s : mp->segments)
    meta.grasp_ids.push_back(off.grasps[s.grasp_index].id);

  const std::string path = tmp_file("pivot_plan_roundtrip.txt");
  write_plan_file(path, *mp, meta);
  PlanFile in = read_plan_file(path);

  CHECK(in.meta.mesh_hash == meta.mesh_hash);
  CHECK(in.meta.num_placements == meta.num_placements);
  CHECK(in.meta.grasp_ids == meta.grasp_ids);
  CHECK((in.meta.limits.box_min - q.limits.box_min).norm() == 0);
  CHECK((in.meta.limits.box_max - q.limits.box_max).norm() == 0);
  CHECK(in.meta.limits.theta_max == q.limits.theta_max);
  CHECK(in.meta.limits.table_clearance == q.limits.table_clearance);
  CHECK(in.meta.planner.k == q.planner.k);
  CHECK(in.meta.planner.xi == q.planner.xi);
  CHECK(in.meta.planner.mu == q.planner.mu);
  CHECK(in.meta.planner.force_rolling == q.planner.force_rolling);
  CHECK(in.meta.step_time == q.T);

  CHECK(near(in.plan.total_duration, mp->total_duration, 1e-15));
  REQUIRE(in.plan.segments.size() == mp->segments.size());
  for (size_t s = 0; s < mp->segments.size(); ++s) {
    const SegmentPlan& a = in.plan.segments[s];
    const SegmentPlan& b = mp->segments[s];
    CHECK(a.from_node == b.from_node);
    CHECK(a.to_node == b.to_node);
    CHECK(a.grasp_index == b.grasp_index);
    CHECK(same_pose(a.start_pose, b.start_pose));
    CHECK(same_pose(a.goal_pose, b.goal_pose));
    CHECK(near(a.plan.duration, b.plan.duration, 1e-15));
    CHECK(near(a.plan.path_length, b.plan.path_length, 1e-12));
    CHECK(near(a.plan.total_rotation, b.plan.total_rotation, 1e-15));
    REQUIRE(a.plan.steps.size() == b.plan.steps.size());
    for (size_t i = 0; i < b.plan.steps.size(); ++i) {
      CHECK(a.plan.steps[i].index == b.plan.steps[i].index);
      CHECK(a.plan.steps[i].mode == b.plan.steps[i].mode);
      CHECK(a.plan.steps[i].slide == b.plan.steps[i].slide);
      CHECK(same_pose(a.plan.steps[i].gripper, b.plan.steps[i].gripper));
    }
  }
  REQUIRE(in.plan.regrasp_waypoints.size() == mp->regrasp_waypoints.size());
  for (size_t i = 0; i < mp->regrasp_waypoints.size(); ++i)
    CHECK(same_pose(in.plan.regrasp_waypoints[i], mp->regrasp_waypoints[i]));

  // The reloaded plan passes the full validator against the cached model.
  ValidationReport rep = validate_plan(in.plan, off.grasps, q.initial, q.goal, off.object_model(),
                                       in.meta.limits, in.meta.planner);
  CHECK(rep.ok);
  CHECK(rep.reason == FailureReason::None);
  std::filesystem::remove(path);
}

TEST_CASE("plan reader rejects malformed files") {
  CHECK_THROWS_AS(read_plan_file(tmp_file("pivot_no_such_plan.txt")), IOError);

  // A tiny hand-written plan in the canonical layout.
  const std::string good =
      "pivotplan 1\n"
      "mesh_hash 42\n"
      "num_placements 2\n"
      "limits -150 -150 0 150 150 300 1 5\n"
      "planner 0.1 2 0.5 0 0 0\n"
      "step_time 0.2\n"
      "total_duration 1.5\n"
      "segments 1\n"
      "waypoints 2\n"
      "segment 0 from 2 to 3 placement -1 grasp_index 0 grasp_id 5\n"
      "duration 1.5 path_length 10 rotation 0.5\n"
      "start 0 0 20 1 0 0 0\n"
      "goal 0 0 20 0 0 1 0\n"
      "steps 2\n"
      "step 0 rolling 0 0 25 1 0 0 0 S3\n"
      "step 1 pivoting 0 0 25 0 0 1 0 S1\n"
      "waypoint 0 0 65 1 0 0 0\n"
      "waypoint 0 0 65 0 0 1 0\n";
  const std::string path = tmp_file("pivot_plan_malformed.txt");

  write_text(path, good);
  PlanFile ok = read_plan_file(path);
  CHECK(ok.meta.mesh_hash == 42);
  CHECK(ok.meta.grasp_ids == std::vector<int>{5});
  CHECK(ok.plan.segments.at(0).plan.steps.at(1).mode == Mode::Pivoting);
  CHECK(ok.plan.segments.at(0).plan.steps.at(1).slide == SlideClass::S1);

  auto reject = [&](const std::string& from, const std::string& to) {
    std::string bad = good;
    const size_t at = bad.find(from);
    REQUIRE(at != std::string::npos);
    bad.replace(at, from.size(), to);
    write_text(path, bad);
    CHECK_THROWS_AS(read_plan_file(path), ParseError);
  };

  reject("pivotplan 1", "otherformat 1");
  reject("pivotplan 1", "pivotplan 99");
  reject("rolling", "strolling");
  reject("S3", "S9");
  reject("steps 2", "steps 3");

  write_text(path, good + "unexpected trailer\n");
  CHECK_THROWS_AS(read_plan_file(path), ParseError);
  std::filesystem::remove(path);
}
