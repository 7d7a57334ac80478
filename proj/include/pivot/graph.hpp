#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pivot/gripper.hpp"
#include "pivot/placement.hpp"
#include "pivot/planner.hpp"

namespace pivot {

/// Everything the offline stage needs besides the mesh itself.
struct GraphConfig {
  GripperModel gripper;
  GraspSamplingParams sampling;
  Real simplify_bound = 1.0;      // hull decimation tolerance, mm
  Real support_margin = 1.0;      // min COM margin inside the support polygon, mm
  Real body_table_margin = 0.5;   // min gripper-box height over the table, mm
  Real angle_step_deg = 0.5;      // resolution of clearance sweeps / reachability grids
  Real regrasp_clearance = 40.0;  // vertical gripper lift between segments, mm
};

/// Precomputed per-object data: simplified hull, grasp set with collision
/// clearance intervals, stable placements, per-placement reachable grasps,
/// and the shared-grasp adjacency between placements.
struct OfflineData {
  uint64_t mesh_hash = 0;
  ConvexPolytope hull;  // simplified
  Real d_H = 0;         // contact-candidate radius covering the simplification error
  Vec3 com = Vec3::Zero();
  std::vector<Grasp> grasps;
  std::vector<std::vector<AngleInterval>> clearance;  // parallel to grasps
  std::vector<StablePlacement> placements;
  std::vector<std::vector<int>> feasible;       // per placement, ascending grasp indices
  std::vector<std::vector<uint8_t>> adjacency;  // placements x placements, 0/1

  ObjectModel object_model() const { return ObjectModel{hull, com, d_H}; }
  /// Canonical resting pose of a placement (object origin over the world
  /// origin; reachability is invariant to horizontal position and spin).
  Pose rest_pose(int placement) const {
    const StablePlacement& pl = placements.at(placement);
    return Pose{pl.rest_orientation, Vec3{0, 0, pl.rest_height}};
  }
};

/// FNV-1a over vertex coordinates, triangle indices and the COM; pairs cached
/// offline data with its source mesh.
uint64_t mesh_content_hash(const TriMesh& mesh);

/// Offline pipeline: convex hull + simplification, grasp sampling + clearance
/// sweep (grasps with no free angle are dropped), stable placements, per-
/// placement reachability, shared-grasp adjacency. Throws NoGraspFound /
/// NoStablePlacement when a stage comes up empty.
OfflineData build_offline(const TriMesh& mesh, const GraphConfig& cfg);

/// Grasps usable while the object holds `pose`: both fingertips clear the
/// table and at least one collision-free palm angle keeps every gripper box
/// at least body_table_margin above it. Ascending indices into off.grasps.
std::vector<int> feasible_grasps_at(const Pose& pose, const OfflineData& off,
                                    const GraphConfig& cfg);

/// Resting pose for a placement visited mid-plan: workspace-box center in xy,
/// rest height in z, and the free spin about world Z chosen nearest the
/// previous pose's orientation.
Pose intermediate_pose(const StablePlacement& pl, const Pose& prev,
                       const WorkspaceLimits& limits);

/// One reorientation executed with a single grasp.
struct SegmentPlan {
  int from_node = -1, to_node = -1;  // see plan_online for node numbering
  int grasp_index = -1;              // into OfflineData::grasps
  Pose start_pose, goal_pose;        // object poses at the segment ends
  GraspPlan plan;
};

struct MultiStepPlan {
  std::vector<SegmentPlan> segments;
  Real total_duration = 0;              // sum of segment durations, s
  std::vector<Pose> regrasp_waypoints;  // per segment: approach then retreat gripper pose
};

struct PlanQuery {
  Pose initial;
  Pose goal;
  WorkspaceLimits limits;
  PlannerConfig planner;
  int N = 50;    // trajectory poses per segment
  Real T = 0.2;  // seconds per step
};

/// Search diagnostics: graph searches run, edges pruned after every shared
/// grasp failed on them, and the node path of the returned plan.
struct OnlineDiag {
  int searches = 0;
  std::vector<std::array<int, 2>> pruned_edges;
  std::vector<int> path_nodes;
};

/// Online stage. Nodes are the stable placements (0..P-1) plus the query's
/// initial pose (node P) and goal pose (node P+1); two nodes are linked when
/// they share a reachable grasp. Finds a fewest-segment node path, tries
/// every tied shortest path (capped) and every shared grasp per edge keeping
/// the fastest, prunes edges on which every grasp fails, and re-searches --
/// at most |E|+1 searches total. nullopt when the goal is unreachable.
std::optional<MultiStepPlan> plan_online(const PlanQuery& q, const OfflineData& off,
                                         const GraphConfig& gcfg, OnlineDiag* diag = nullptr);

}  // namespace pivot
