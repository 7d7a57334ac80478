#pragma once

#include <string>
#include <vector>

#include "pivot/graph.hpp"

namespace pivot {

enum class FailureReason {
  None,
  ContactLoss,         // support vertex leaves the table (or cannot reach it)
  StabilityViolation,  // an increment labeled pivoting is not robustly stable
  CouplingViolation,   // a rolling increment spins the object against the grip
  StickingViolation,   // a pinned support vertex drifts horizontally
  BoxViolation,        // gripper position outside the workspace box
  TiltViolation,       // gripper Z tilted beyond the limit
  GoalMismatch,        // reconstructed final pose misses the goal
  ChainBreak,          // consecutive segments do not share a pose
  ModelMismatch,       // structural inconsistency (sizes, indices, grasp hold)
};

const char* to_string(FailureReason r);

/// Acceptance thresholds for replaying a plan. Distances mm, angles rad.
struct ValidationTolerances {
  Real contact = 0.5;     // support vertex distance from the table
  Real coupling = 1e-9;   // residual spin on a rolling increment
  Real sticking = 1e-6;   // horizontal drift of a pinned support vertex
  Real box = 1e-6;        // workspace box slack
  Real tilt = 1e-6;       // tilt-limit slack
  Real goal_pos = 1e-3;   // final object position error
  Real goal_rot = 1e-6;   // final object orientation error
  Real chain_pos = 1e-6;  // segment continuity, position
  Real chain_rot = 1e-9;  // segment continuity, orientation
};

/// One reconstructed trajectory step.
struct StepRecord {
  int index = 0;
  Pose object;  // reconstructed object pose
  Mode mode = Mode::Rolling;
  SlideClass slide = SlideClass::S3;
};

struct ValidationReport {
  bool ok = true;
  FailureReason reason = FailureReason::None;
  int segment = -1;  // failing segment for multi-step plans, else -1
  int step = -1;     // failing step (or increment start) index, else -1
  std::string detail;
  std::vector<StepRecord> steps;  // reconstruction up to the failure
  std::string to_text() const;
};

/// Replays a one-grasp plan from the recorded gripper poses and increment
/// modes alone. The object pose is reconstructed step by step -- rolling
/// means rigid attachment, pivoting means the spin about the grasp axis that
/// returns the support vertex to the table -- and every promise the plan
/// makes is re-checked against that reconstruction: table contact, robust
/// pivot stability, rolling coupling, sticking contacts, workspace box and
/// tilt limits, and the goal pose.
ValidationReport validate_plan(const GraspPlan& plan, const Grasp& grasp, const Pose& initial,
                               const Pose& goal, const ObjectModel& obj,
                               const WorkspaceLimits& limits, const PlannerConfig& cfg,
                               const ValidationTolerances& tol = {});

/// Validates every segment against its recorded endpoint poses plus the
/// continuity between consecutive segments and with the query endpoints.
ValidationReport validate_plan(const MultiStepPlan& plan, const std::vector<Grasp>& grasps,
                               const Pose& initial, const Pose& goal, const ObjectModel& obj,
                               const WorkspaceLimits& limits, const PlannerConfig& cfg,
                               const ValidationTolerances& tol = {});

}  // namespace pivot
