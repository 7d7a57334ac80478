#include "pivot/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <tuple>

namespace pivot {
namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<BenchProblem> make_problems(const OfflineData& off, const GraphConfig& gcfg,
                                        const WorkspaceLimits& limits, int count, uint64_t seed) {
  if (off.placements.empty()) throw NoStablePlacement("problem generation needs placements");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(off.placements.size()) - 1);
  std::uniform_real_distribution<Real> spin(-kPi, kPi);
  std::uniform_real_distribution<Real> unit(-1.0, 1.0);
  const Vec3 center = 0.5 * (limits.box_min + limits.box_max);
  const Vec3 half = 0.25 * (limits.box_max - limits.box_min);  // inner half of the box

  auto draw_pose = [&]() -> Pose {
    for (int tries = 0; tries < 100; ++tries) {
      const StablePlacement& pl = off.placements[pick(rng)];
      const Quat q =
          (Quat(Eigen::AngleAxis<Real>(spin(rng), Vec3::UnitZ())) * pl.rest_orientation)
              .normalized();
      const Vec3 pos{center.x() + half.x() * unit(rng), center.y() + half.y() * unit(rng),
                     pl.rest_height};
      Pose pose{q, pos};
      if (!feasible_grasps_at(pose, off, gcfg).empty()) return pose;
    }
    throw NoGraspFound("no placement pose with a reachable grasp after 100 draws");
  };

  std::vector<BenchProblem> problems;
  problems.reserve(count);
  for (int i = 0; i < count; ++i) {
    BenchProblem p;
    p.initial = draw_pose();
    p.goal = draw_pose();
    problems.push_back(p);
  }
  return problems;
}

std::vector<BenchRow> run_bench(const std::vector<std::pair<std::string, TriMesh>>& objects,
                                const BenchConfig& cfg) {
  std::vector<BenchRow> rows;
  for (const auto& [name, raw] : objects) {
    const TriMesh mesh = scale_to_extent(raw, cfg.target_extent);
    const OfflineData off = build_offline(mesh, cfg.graph);
    const std::vector<BenchProblem> problems = make_problems(
        off, cfg.graph, cfg.limits, cfg.problems_per_object, cfg.seed ^ fnv1a(name));

    for (Real deg : cfg.theta_max_deg) {
      for (const char* method : {"pivoting", "pickplace"}) {
        BenchRow row;
        row.object = name;
        row.theta_max_deg = deg;
        row.method = method;
        row.problems = static_cast<int>(problems.size());
        Real duration_sum = 0, compute_sum = 0;
        for (const BenchProblem& prob : problems) {
          PlanQuery q;
          q.initial = prob.initial;
          q.goal = prob.goal;
          q.limits = cfg.limits;
          q.limits.theta_max = deg2rad(deg);
          q.planner = cfg.planner;
          q.planner.force_rolling = row.method == "pickplace";
          q.N = cfg.n_steps;
          q.T = cfg.step_time;
          const auto t0 = std::chrono::steady_clock::now();
          const std::optional<MultiStepPlan> plan = plan_online(q, off, cfg.graph);
          compute_sum += std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
          if (plan) {
            ++row.solved;
            duration_sum += plan->total_duration;
          }
        }
        row.mean_duration_s = row.solved > 0 ? duration_sum / row.solved : 0;
        row.mean_compute_s = row.problems > 0 ? compute_sum / row.problems : 0;
        rows.push_back(std::move(row));
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.object, a.theta_max_deg, a.method) <
           std::tie(b.object, b.theta_max_deg, b.method);
  });
  return rows;
}

std::string to_csv(const std::vector<BenchRow>& rows) {
  std::string csv = "object,theta_max_deg,method,problems,solved,mean_duration_s,mean_compute_s\n";
  for (const BenchRow& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%s,%g,%s,%d,%d,%.6f,%.6f\n", r.object.c_str(),
                  r.theta_max_deg, r.method.c_str(), r.problems, r.solved, r.mean_duration_s,
                  r.mean_compute_s);
    csv += line;
  }
  return csv;
}

}  // namespace pivot
