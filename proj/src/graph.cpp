#include "pivot/graph.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <functional>

namespace pivot {

namespace {

constexpr int kMaxTiedPaths = 16;

void hash_bytes(uint64_t& h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

std::vector<int> common_grasps(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

uint64_t mesh_content_hash(const TriMesh& mesh) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (int r = 0; r < mesh.V.rows(); ++r)
    for (int c = 0; c < 3; ++c) {
      const Real v = mesh.V(r, c);
      hash_bytes(h, &v, sizeof(v));
    }
  for (int r = 0; r < mesh.F.rows(); ++r)
    for (int c = 0; c < 3; ++c) {
      const int v = mesh.F(r, c);
      hash_bytes(h, &v, sizeof(v));
    }
  for (int c = 0; c < 3; ++c) {
    const Real v = mesh.com[c];
    hash_bytes(h, &v, sizeof(v));
  }
  return h;
}

std::vector<int> feasible_grasps_at(const Pose& pose, const OfflineData& off,
                                    const GraphConfig& cfg) {
  std::vector<int> out;
  const Real step = deg2rad(cfg.angle_step_deg);
  for (int gi = 0; gi < static_cast<int>(off.grasps.size()); ++gi) {
    const Grasp& g = off.grasps[gi];
    const Real zl = pose.apply(g.p_left).z();
    const Real zr = pose.apply(g.p_right).z();
    if (std::min(zl, zr) < cfg.gripper.tip_clearance - 1e-9) continue;

    const Vec3 axis_w = pose.rotate(g.axis());
    const Vec3 ref_w = pose.rotate(g.ref_dir());
    const Vec3 y_w = axis_w.cross(ref_w);
    const Vec3 mid_w = pose.apply(g.midpoint());

    bool reachable = false;
    for (const AngleInterval& iv : off.clearance[gi]) {
      for (Real b = iv.lo; b <= iv.hi + 1e-12 && !reachable; b += step) {
        const Vec3 zdir = std::cos(b) * ref_w + std::sin(b) * y_w;
        const auto boxes = gripper_boxes(cfg.gripper, g.width(), mid_w, axis_w, zdir);
        Real zmin = boxes[0].min_z();
        for (int k = 1; k < 3; ++k) zmin = std::min(zmin, boxes[k].min_z());
        if (zmin >= cfg.body_table_margin) reachable = true;
      }
      if (reachable) break;
    }
    if (reachable) out.push_back(gi);
  }
  return out;
}

OfflineData build_offline(const TriMesh& mesh, const GraphConfig& cfg) {
  OfflineData off;
  off.mesh_hash = mesh_content_hash(mesh);
  off.com = mesh.com;

  const ConvexPolytope full = convex_hull(mesh);
  off.hull = simplify_mesh(full, cfg.simplify_bound);
  off.d_H = vertex_cloud_radius(full, off.hull);

  const auto sampled = sample_grasps(mesh, cfg.gripper, cfg.sampling);
  for (const Grasp& g : sampled) {
    try {
      auto iv = collision_free_angles(g, mesh, cfg.gripper, cfg.angle_step_deg);
      off.grasps.push_back(g);
      off.clearance.push_back(std::move(iv));
    } catch (const EmptyRange&) {
      // gripper blocked at every angle: drop the grasp, keep the others
    }
  }
  if (off.grasps.empty()) throw NoGraspFound("every sampled grasp is blocked at all angles");

  off.placements = stable_placements(off.hull, off.com, cfg.support_margin);
  if (off.placements.empty())
    throw NoStablePlacement("no hull facet supports the center of mass");

  const int P = static_cast<int>(off.placements.size());
  off.feasible.reserve(P);
  for (int p = 0; p < P; ++p)
    off.feasible.push_back(feasible_grasps_at(off.rest_pose(p), off, cfg));

  off.adjacency.assign(P, std::vector<uint8_t>(P, 0));
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j)
      if (!common_grasps(off.feasible[i], off.feasible[j]).empty())
        off.adjacency[i][j] = off.adjacency[j][i] = 1;
  return off;
}

Pose intermediate_pose(const StablePlacement& pl, const Pose& prev,
                       const WorkspaceLimits& limits) {
  // Spin psi about world Z maximizing the quaternion dot with the previous
  // orientation: q(psi) = Rz(psi) * q_rest has dot a*cos(psi/2) + b*sin(psi/2).
  const Quat& qr = pl.rest_orientation;
  const Quat& qp = prev.orientation;
  const Quat kz{0, 0, 0, 1};
  const Quat kqr = kz * qr;
  const Real a = qr.coeffs().dot(qp.coeffs());
  const Real b = kqr.coeffs().dot(qp.coeffs());
  const Real psi = (a == 0 && b == 0) ? 0.0 : 2.0 * std::atan2(b, a);
  const Quat spin{Eigen::AngleAxis<Real>(psi, Vec3::UnitZ())};

  Pose pose;
  pose.orientation = (spin * qr).normalized();
  pose.position = Vec3{0.5 * (limits.box_min.x() + limits.box_max.x()),
                       0.5 * (limits.box_min.y() + limits.box_max.y()), pl.rest_height};
  return pose;
}

std::optional<MultiStepPlan> plan_online(const PlanQuery& q, const OfflineData& off,
                                         const GraphConfig& gcfg, OnlineDiag* diag) {
  OnlineDiag local;
  if (!diag) diag = &local;
  diag->searches = 0;
  diag->pruned_edges.clear();
  diag->path_nodes.clear();

  const int P = static_cast<int>(off.placements.size());
  const int start = P, goal = P + 1, NN = P + 2;

  std::vector<std::vector<int>> node_grasps(NN);
  for (int i = 0; i < P; ++i) node_grasps[i] = off.feasible[i];
  node_grasps[start] = feasible_grasps_at(q.initial, off, gcfg);
  node_grasps[goal] = feasible_grasps_at(q.goal, off, gcfg);
  if (node_grasps[start].empty() || node_grasps[goal].empty()) return std::nullopt;

  std::vector<std::vector<uint8_t>> alive(NN, std::vector<uint8_t>(NN, 0));
  int num_edges = 0;
  for (int i = 0; i < NN; ++i)
    for (int j = i + 1; j < NN; ++j)
      if (!common_grasps(node_grasps[i], node_grasps[j]).empty()) {
        alive[i][j] = alive[j][i] = 1;
        ++num_edges;
      }

  const ObjectModel model = off.object_model();

  // Fastest plan over the shared grasps of one edge; ties keep the lowest
  // grasp index (they are tried in ascending order).
  auto plan_edge = [&](const Pose& a, const Pose& b, const std::vector<int>& grasps)
      -> std::optional<std::pair<int, GraspPlan>> {
    std::optional<std::pair<int, GraspPlan>> best;
    for (int gi : grasps) {
      ReorientTask task{a, b, off.grasps[gi], q.N, q.T};
      PlanResult r = plan_one_grasp(task, model, off.clearance[gi], q.limits, q.planner);
      if (r.ok && (!best || r.plan.duration < best->second.duration - 1e-12))
        best = std::make_pair(gi, std::move(r.plan));
    }
    return best;
  };

  auto bfs = [&](int src) {
    std::vector<int> dist(NN, -1);
    std::deque<int> queue{src};
    dist[src] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v = 0; v < NN; ++v)
        if (alive[u][v] && dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
    }
    return dist;
  };

  for (int round = 0; round <= num_edges; ++round) {
    ++diag->searches;
    const std::vector<int> dist = bfs(start);
    if (dist[goal] < 0) return std::nullopt;
    const std::vector<int> rdist = bfs(goal);
    const int L = dist[goal];

    // All tied shortest node paths in lexicographic order, capped.
    std::vector<std::vector<int>> paths;
    std::vector<int> cur{start};
    std::function<void(int)> dfs = [&](int u) {
      if (static_cast<int>(paths.size()) >= kMaxTiedPaths) return;
      if (u == goal) {
        paths.push_back(cur);
        return;
      }
      for (int v = 0; v < NN && static_cast<int>(paths.size()) < kMaxTiedPaths; ++v) {
        if (!alive[u][v]) continue;
        if (dist[v] != dist[u] + 1 || rdist[v] < 0 || dist[v] + rdist[v] != L) continue;
        cur.push_back(v);
        dfs(v);
        cur.pop_back();
      }
    };
    dfs(start);

    struct Candidate {
      Real duration = 0;
      std::vector<int> nodes;
      std::vector<SegmentPlan> segs;
    };
    std::optional<Candidate> best;
    bool pruned_this_round = false;

    for (const auto& nodes : paths) {
      bool usable = true;
      for (size_t k = 0; k + 1 < nodes.size(); ++k)
        if (!alive[nodes[k]][nodes[k + 1]]) {
          usable = false;
          break;
        }
      if (!usable) continue;

      std::vector<SegmentPlan> segs;
      Real total = 0;
      bool failed = false;
      Pose cur_pose = q.initial;
      for (size_t k = 0; k + 1 < nodes.size(); ++k) {
        const int a = nodes[k], b = nodes[k + 1];
        const Pose next_pose =
            (b == goal) ? q.goal : intermediate_pose(off.placements[b], cur_pose, q.limits);
        auto seg = plan_edge(cur_pose, next_pose, common_grasps(node_grasps[a], node_grasps[b]));
        if (!seg) {
          alive[a][b] = alive[b][a] = 0;
          diag->pruned_edges.push_back({std::min(a, b), std::max(a, b)});
          pruned_this_round = true;
          failed = true;
          break;
        }
        SegmentPlan sp;
        sp.from_node = a;
        sp.to_node = b;
        sp.grasp_index = seg->first;
        sp.start_pose = cur_pose;
        sp.goal_pose = next_pose;
        sp.plan = std::move(seg->second);
        total += sp.plan.duration;
        segs.push_back(std::move(sp));
        cur_pose = next_pose;
      }
      if (failed) continue;
      if (!best || total < best->duration - 1e-12)
        best = Candidate{total, nodes, std::move(segs)};
    }

    if (best) {
      MultiStepPlan mp;
      mp.segments = std::move(best->segs);
      mp.total_duration = best->duration;
      for (const auto& s : mp.segments) {
        Pose approach = s.plan.steps.front().gripper;
        approach.position.z() += gcfg.regrasp_clearance;
        Pose retreat = s.plan.steps.back().gripper;
        retreat.position.z() += gcfg.regrasp_clearance;
        mp.regrasp_waypoints.push_back(approach);
        mp.regrasp_waypoints.push_back(retreat);
      }
      diag->path_nodes = best->nodes;
      return mp;
    }
    if (!pruned_this_round) return std::nullopt;  // defensive: cannot make progress
  }
  return std::nullopt;
}

}  // namespace pivot
