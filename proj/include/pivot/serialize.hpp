#pragma once

#include <string>

#include "pivot/bench.hpp"
#include "pivot/graph.hpp"

namespace pivot {

// ---------------------------------------------------------------------------
// Offline cache: JSON snapshot of everything build_offline produced, keyed by
// the source mesh's content hash. Loading restores the exact stored geometry
// (hull facets, normals and offsets included) rather than recomputing it.
// ---------------------------------------------------------------------------

void save_offline_cache(const std::string& path, const OfflineData& off);

/// Throws IOError when the file cannot be read, ParseError on malformed or
/// wrong-format content.
OfflineData load_offline_cache(const std::string& path);

// ---------------------------------------------------------------------------
// Configuration files: JSON objects where every missing key keeps its
// compiled-in default. Angles are written in degrees (keys end in _deg),
// lengths in mm, quaternions as [w, x, y, z].
// ---------------------------------------------------------------------------

GraphConfig load_graph_config(const std::string& path);

/// Requires "initial" and "goal" poses; everything else is optional.
PlanQuery load_plan_query(const std::string& path);

/// A plan request together with the gripper/graph settings it should run
/// under: the query keys at the top level plus an optional "graph" section.
struct PlanSpec {
  PlanQuery query;
  GraphConfig graph;
};

PlanSpec load_plan_spec(const std::string& path);

BenchConfig load_bench_config(const std::string& path);

// ---------------------------------------------------------------------------
// Plan files: versioned plain text. Stores per step the gripper pose,
// increment mode and sliding class; per segment the node endpoints, the
// intermediate placement id (-1 when the segment ends at the query goal),
// the grasp index and id, and the object poses at both ends; plus the
// regrasp waypoints and enough context (mesh hash, workspace limits, planner
// knobs) to validate the plan against a cache later.
// ---------------------------------------------------------------------------

struct PlanFileMeta {
  uint64_t mesh_hash = 0;
  WorkspaceLimits limits;
  PlannerConfig planner;
  Real step_time = 0.2;
  int num_placements = 0;      // node numbering context for placement ids
  std::vector<int> grasp_ids;  // per segment: Grasp::id behind each grasp_index
};

struct PlanFile {
  PlanFileMeta meta;
  MultiStepPlan plan;
};

void write_plan_file(const std::string& path, const MultiStepPlan& plan,
                     const PlanFileMeta& meta);

/// Throws IOError / ParseError mirroring the cache loader.
PlanFile read_plan_file(const std::string& path);

}  // namespace pivot
