#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pivot/graph.hpp"

namespace pivot {

/// Benchmark protocol: per object, a seeded set of reorientation problems
/// between random stable placements, solved across a tilt-limit sweep both
/// with pivoting enabled and with the pick-and-place (all-rolling) baseline.
struct BenchConfig {
  uint64_t seed = 1;
  int problems_per_object = 20;
  std::vector<Real> theta_max_deg{10, 20, 30, 40, 50, 60, 70, 80};
  int n_steps = 30;
  Real step_time = 0.2;        // seconds per trajectory step
  Real target_extent = 100.0;  // largest bounding-box side after scaling, mm
  WorkspaceLimits limits;
  PlannerConfig planner;
  GraphConfig graph;
};

struct BenchProblem {
  Pose initial;
  Pose goal;
};

/// One CSV row: outcomes of one (object, tilt limit, method) cell.
struct BenchRow {
  std::string object;
  Real theta_max_deg = 0;
  std::string method;  // "pivoting" | "pickplace"
  int problems = 0;
  int solved = 0;
  Real mean_duration_s = 0;  // over solved problems, 0 when none solved
  Real mean_compute_s = 0;   // wall clock over all attempts
};

/// Seeded problem set: endpoints are stable placements with a random spin
/// and a random position inside the inner half of the workspace box, each
/// re-drawn (up to 100 tries) until it has a reachable grasp.
std::vector<BenchProblem> make_problems(const OfflineData& off, const GraphConfig& gcfg,
                                        const WorkspaceLimits& limits, int count, uint64_t seed);

/// Full sweep over objects x tilt limits x {pivoting, pickplace}; both
/// methods see identical problems. Rows come back sorted by (object,
/// theta_max, method). Wall clock is measured for the compute column only
/// and never feeds a decision, so all other columns are seed-deterministic.
std::vector<BenchRow> run_bench(const std::vector<std::pair<std::string, TriMesh>>& objects,
                                const BenchConfig& cfg);

std::string to_csv(const std::vector<BenchRow>& rows);

}  // namespace pivot
