#include <algorithm>
#include <deque>

#include <doctest.h>
#include "pivot/graph.hpp"
#include "support/test_meshes.hpp"

using namespace pivot;
using namespace testsup;

namespace {

bool near(Real a, Real b, Real tol) { return std::abs(a - b) <= tol; }

GraphConfig small_config(int max_grasps, Real stroke = 120) {
  GraphConfig cfg;
  cfg.gripper.stroke = stroke;
  cfg.sampling.max_n = max_grasps;
  cfg.sampling.seed = 7;
  return cfg;
}

Quat rot_y(Real deg) { return Quat{Eigen::AngleAxis<Real>(deg2rad(deg), Vec3::UnitY())}; }
Quat rot_z(Real deg) { return Quat{Eigen::AngleAxis<Real>(deg2rad(deg), Vec3::UnitZ())}; }

// Hop count from `src` to `dst` over an explicit edge set; -1 when unreachable.
int bfs_hops(int nn, const std::vector<std::vector<uint8_t>>& edge, int src, int dst) {
  std::vector<int> dist(nn, -1);
  std::deque<int> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v = 0; v < nn; ++v)
      if (edge[u][v] && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist[dst];
}

}  // namespace

TEST_CASE("mesh hash distinguishes content and is reproducible") {
  TriMesh a = make_cube(40);
  TriMesh b = make_cube(40);
  CHECK(mesh_content_hash(a) == mesh_content_hash(b));
  b.V(0, 0) += 1e-6;
  CHECK(mesh_content_hash(a) != mesh_content_hash(b));
  TriMesh c = make_cube(40);
  c.com.x() += 0.5;
  CHECK(mesh_content_hash(a) != mesh_content_hash(c));
}

TEST_CASE("offline data on a narrow box: placements that hide the grasp axis are isolated") {
  // Only the 20 mm direction fits the 30 mm stroke, so every grasp runs along
  // X. Resting on an X facet turns that axis vertical and puts one fingertip
  // on the table, so those two placements have no reachable grasp.
  TriMesh mesh = make_box(20, 60, 80);
  GraphConfig cfg = small_config(60, 30);
  OfflineData off = build_offline(mesh, cfg);

  REQUIRE(off.placements.size() == 6);
  REQUIRE(!off.grasps.empty());
  for (const Grasp& g : off.grasps) CHECK(near(std::abs(g.axis().x()), 1.0, 1e-6));
  CHECK(off.clearance.size() == off.grasps.size());
  CHECK(off.mesh_hash == mesh_content_hash(mesh));
  CHECK(off.d_H <= cfg.simplify_bound + 1e-9);

  int isolated = 0;
  for (size_t p = 0; p < off.placements.size(); ++p) {
    const Vec3 axis_up = off.placements[p].rest_orientation * Vec3::UnitX();
    const bool axis_vertical = std::abs(axis_up.z()) > 0.9;
    if (axis_vertical) {
      ++isolated;
      CHECK(off.feasible[p].empty());
      for (size_t q = 0; q < off.placements.size(); ++q) CHECK(off.adjacency[p][q] == 0);
    } else {
      CHECK(!off.feasible[p].empty());
      CHECK(std::is_sorted(off.feasible[p].begin(), off.feasible[p].end()));
    }
  }
  CHECK(isolated == 2);

  // The four usable placements share the central grasps pairwise.
  for (size_t p = 0; p < off.placements.size(); ++p)
    for (size_t q = p + 1; q < off.placements.size(); ++q)
      if (!off.feasible[p].empty() && !off.feasible[q].empty())
        CHECK(off.adjacency[p][q] == 1);

  // Same mesh, same config: bit-identical offline result.
  OfflineData again = build_offline(mesh, cfg);
  CHECK(again.grasps.size() == off.grasps.size());
  CHECK(again.feasible == off.feasible);
  CHECK(again.adjacency == off.adjacency);
}

TEST_CASE("grasp sampling with an undersized stroke fails loudly") {
  TriMesh mesh = make_box(20, 60, 80);
  GraphConfig cfg = small_config(40, 10);
  CHECK_THROWS_AS(build_offline(mesh, cfg), NoGraspFound);
}

TEST_CASE("reachable grasp sets react to pose and fingertip clearance") {
  TriMesh mesh = make_cube(40);
  GraphConfig cfg = small_config(24);
  OfflineData off = build_offline(mesh, cfg);
  REQUIRE(!off.grasps.empty());

  // Held high above the table every grasp clears it.
  Pose high{Quat::Identity(), Vec3{0, 0, 200}};
  CHECK(feasible_grasps_at(high, off, cfg).size() == off.grasps.size());

  // At rest some grasps survive; with an absurd fingertip clearance none do.
  Pose rest{Quat::Identity(), Vec3{0, 0, 20}};
  CHECK(!feasible_grasps_at(rest, off, cfg).empty());
  GraphConfig strict = cfg;
  strict.gripper.tip_clearance = 45;
  CHECK(feasible_grasps_at(rest, off, strict).empty());
}

TEST_CASE("intermediate placement pose sits at the box center and keeps the previous spin") {
  StablePlacement pl;
  pl.rest_orientation = Quat::Identity();
  pl.rest_height = 20;
  WorkspaceLimits limits;
  limits.box_min = Vec3{-100, -200, 0};
  limits.box_max = Vec3{300, 100, 250};

  Pose prev{rot_z(30), Vec3{50, 50, 20}};
  Pose mid = intermediate_pose(pl, prev, limits);
  CHECK(near(mid.position.x(), 100, 1e-12));
  CHECK(near(mid.position.y(), -50, 1e-12));
  CHECK(near(mid.position.z(), 20, 1e-12));
  // The free spin can match a pure-yaw previous orientation exactly.
  CHECK(orientation_distance(mid.orientation, prev.orientation) < 1e-9);
  // The spun pose still rests on the same facet.
  CHECK(near((mid.orientation * Vec3::UnitZ()).z(), 1.0, 1e-12));

  // For a generic previous orientation the chosen spin is no farther than any
  // sampled alternative.
  Pose prev2{(rot_y(40) * rot_z(75)).normalized(), Vec3::Zero()};
  Pose mid2 = intermediate_pose(pl, prev2, limits);
  const Real chosen = orientation_distance(mid2.orientation, prev2.orientation);
  for (int k = 0; k < 360; k += 5) {
    const Quat alt = rot_z(Real(k)) * pl.rest_orientation;
    CHECK(chosen <= orientation_distance(alt, prev2.orientation) + 1e-9);
  }
}

TEST_CASE("pivoting flips a cube in a single grasp") {
  // 180 degrees about a horizontal axis exceeds what the gripper may rotate,
  // but pivoting increments decouple the gripper angle from the object's
  // rotation, so one grasp suffices.
  TriMesh mesh = make_cube(40);
  GraphConfig gcfg = small_config(24);
  OfflineData off = build_offline(mesh, gcfg);
  const int P = static_cast<int>(off.placements.size());

  PlanQuery q;
  q.initial = Pose{Quat::Identity(), Vec3{0, 0, 20}};
  q.goal = Pose{rot_y(180), Vec3{0, 0, 20}};
  q.limits.theta_max = deg2rad(50);
  q.N = 25;

  OnlineDiag diag;
  auto mp = plan_online(q, off, gcfg, &diag);
  REQUIRE(mp.has_value());
  CHECK(mp->segments.size() == 1);
  CHECK(diag.searches == 1);
  CHECK(diag.pruned_edges.empty());
  CHECK(diag.path_nodes == std::vector<int>{P, P + 1});
}

TEST_CASE("a pick-and-place flip needs a regrasp: two segments after the direct edge fails") {
  // With rolling forced the gripper must turn with the object, so the direct
  // 180 degree edge is infeasible for every grasp; the planner prunes it and
  // routes through an intermediate placement.
  TriMesh mesh = make_cube(40);
  GraphConfig gcfg = small_config(24);
  OfflineData off = build_offline(mesh, gcfg);
  const int P = static_cast<int>(off.placements.size());
  REQUIRE(P == 6);

  PlanQuery q;
  q.initial = Pose{Quat::Identity(), Vec3{0, 0, 20}};
  q.goal = Pose{rot_y(180), Vec3{0, 0, 20}};
  q.limits.theta_max = deg2rad(50);
  q.planner.force_rolling = true;
  q.N = 25;

  OnlineDiag diag;
  auto mp = plan_online(q, off, gcfg, &diag);
  REQUIRE(mp.has_value());

  // A 180 degree flip cannot be done in one grasp at this tilt limit: the
  // direct edge must have been pruned and the plan goes through a placement.
  REQUIRE(mp->segments.size() == 2);
  CHECK(diag.searches == 2);
  REQUIRE(!diag.pruned_edges.empty());
  CHECK(diag.pruned_edges.front() == std::array<int, 2>{P, P + 1});

  CHECK(diag.path_nodes.size() == 3);
  CHECK(diag.path_nodes.front() == P);
  CHECK(diag.path_nodes.back() == P + 1);

  // Segments chain exactly from the query start to the query goal.
  CHECK(near((mp->segments[0].start_pose.position - q.initial.position).norm(), 0, 1e-12));
  CHECK(orientation_distance(mp->segments[0].start_pose.orientation, q.initial.orientation) <
        1e-12);
  CHECK(near((mp->segments[1].goal_pose.position - q.goal.position).norm(), 0, 1e-12));
  CHECK(orientation_distance(mp->segments[1].goal_pose.orientation, q.goal.orientation) < 1e-12);
  CHECK(near((mp->segments[0].goal_pose.position - mp->segments[1].start_pose.position).norm(), 0,
             1e-12));
  CHECK(orientation_distance(mp->segments[0].goal_pose.orientation,
                             mp->segments[1].start_pose.orientation) < 1e-12);

  // The intermediate node is a placement and its pose matches that placement.
  const int mid_node = diag.path_nodes[1];
  REQUIRE(mid_node < P);
  CHECK(near(mp->segments[0].goal_pose.position.z(), off.placements[mid_node].rest_height, 1e-9));

  Real total = 0;
  for (const auto& s : mp->segments) {
    total += s.plan.duration;
    CHECK(s.grasp_index >= 0);
    CHECK(s.grasp_index < static_cast<int>(off.grasps.size()));
    REQUIRE(s.plan.steps.size() == static_cast<size_t>(q.N));
  }
  CHECK(near(mp->total_duration, total, 1e-12));

  // Two waypoints per segment, lifted by the regrasp clearance.
  REQUIRE(mp->regrasp_waypoints.size() == 4);
  CHECK(near(mp->regrasp_waypoints[0].position.z(),
             mp->segments[0].plan.steps.front().gripper.position.z() + gcfg.regrasp_clearance,
             1e-12));
  CHECK(near(mp->regrasp_waypoints[1].position.z(),
             mp->segments[0].plan.steps.back().gripper.position.z() + gcfg.regrasp_clearance,
             1e-12));

  // Segment count equals the hop count of an independent BFS over the final
  // shared-grasp graph (initial edges minus the pruned ones).
  const int nn = P + 2;
  std::vector<std::vector<int>> node_grasps(nn);
  for (int i = 0; i < P; ++i) node_grasps[i] = off.feasible[i];
  node_grasps[P] = feasible_grasps_at(q.initial, off, gcfg);
  node_grasps[P + 1] = feasible_grasps_at(q.goal, off, gcfg);
  std::vector<std::vector<uint8_t>> edge(nn, std::vector<uint8_t>(nn, 0));
  int num_edges = 0;
  for (int i = 0; i < nn; ++i)
    for (int j = i + 1; j < nn; ++j) {
      std::vector<int> shared;
      std::set_intersection(node_grasps[i].begin(), node_grasps[i].end(), node_grasps[j].begin(),
                            node_grasps[j].end(), std::back_inserter(shared));
      if (!shared.empty()) edge[i][j] = edge[j][i] = 1, ++num_edges;
    }
  for (const auto& pe : diag.pruned_edges) edge[pe[0]][pe[1]] = edge[pe[1]][pe[0]] = 0;
  CHECK(bfs_hops(nn, edge, P, P + 1) == static_cast<int>(mp->segments.size()));
  CHECK(diag.searches <= num_edges + 1);
}

TEST_CASE("a single-segment query keeps the direct edge") {
  TriMesh mesh = make_cube(40);
  GraphConfig gcfg = small_config(24);
  OfflineData off = build_offline(mesh, gcfg);
  const int P = static_cast<int>(off.placements.size());

  PlanQuery q;
  q.initial = Pose{Quat::Identity(), Vec3{0, 0, 20}};
  q.goal = Pose{(rot_z(40) * rot_y(90)).normalized(), Vec3{30, -20, 20}};

  OnlineDiag diag;
  auto mp = plan_online(q, off, gcfg, &diag);
  REQUIRE(mp.has_value());
  CHECK(mp->segments.size() == 1);
  CHECK(diag.searches == 1);
  CHECK(diag.pruned_edges.empty());
  CHECK(diag.path_nodes == std::vector<int>{P, P + 1});
  CHECK(mp->total_duration > 0);
  CHECK(mp->regrasp_waypoints.size() == 2);
}

TEST_CASE("an unreachable goal reports failure instead of a plan") {
  TriMesh mesh = make_cube(40);
  GraphConfig gcfg = small_config(24);
  OfflineData off = build_offline(mesh, gcfg);

  PlanQuery q;
  q.initial = Pose{Quat::Identity(), Vec3{0, 0, 20}};
  q.goal = Pose{rot_y(180), Vec3{0, 0, 20}};
  // No grasp can hold the goal pose with this fingertip clearance.
  GraphConfig strict = gcfg;
  strict.gripper.tip_clearance = 45;
  OnlineDiag diag;
  CHECK(!plan_online(q, off, strict, &diag).has_value());
  CHECK(diag.searches == 0);
}
