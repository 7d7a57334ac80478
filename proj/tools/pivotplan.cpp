#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pivot/bench.hpp"
#include "pivot/serialize.hpp"
#include "pivot/validate.hpp"

namespace {

using namespace pivot;

// Logging goes to stderr and is controlled solely by PIVOTPLAN_LOG
// (off|error|warn|info|debug); results go to stdout.
enum class LogLevel { Off = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* v = std::getenv("PIVOTPLAN_LOG");
    if (!v) return LogLevel::Warn;
    std::string s(v);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "off") return LogLevel::Off;
    if (s == "error") return LogLevel::Error;
    if (s == "warn" || s == "warning") return LogLevel::Warn;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log_line(LogLevel lvl, const char* tag, const std::string& msg) {
  if (log_threshold() >= lvl) std::cerr << '[' << tag << "] " << msg << '\n';
}
void log_info(const std::string& msg) { log_line(LogLevel::Info, "info", msg); }

std::string node_name(int node, int num_placements) {
  if (node == num_placements) return "start";
  if (node == num_placements + 1) return "goal";
  return "placement " + std::to_string(node);
}

int run_preprocess(const std::string& mesh_path, const std::string& config_path,
                   const std::string& out_path) {
  TriMesh mesh = load_mesh(mesh_path);
  GraphConfig cfg = config_path.empty() ? GraphConfig{} : load_graph_config(config_path);
  log_info("building offline data for " + mesh_path);
  OfflineData off = build_offline(mesh, cfg);
  save_offline_cache(out_path, off);
  std::cout << "mesh hash: " << off.mesh_hash << '\n';
  std::cout << "grasps: " << off.grasps.size() << '\n';
  std::cout << "placements: " << off.placements.size() << '\n';
  std::cout << "cache written to " << out_path << '\n';
  return 0;
}

int run_plan(const std::string& spec_path, const std::string& cache_path,
             const std::string& out_path) {
  PlanSpec spec = load_plan_spec(spec_path);
  OfflineData off = load_offline_cache(cache_path);
  const int P = static_cast<int>(off.placements.size());
  log_info("searching the placement graph (" + std::to_string(P) + " placements, " +
           std::to_string(off.grasps.size()) + " grasps)");

  OnlineDiag diag;
  std::optional<MultiStepPlan> mp = plan_online(spec.query, off, spec.graph, &diag);
  if (!mp.has_value()) {
    std::cout << "infeasible\n";
    std::cout << "searches: " << diag.searches << '\n';
    for (const auto& e : diag.pruned_edges)
      std::cout << "pruned edge: " << node_name(e[0], P) << " -- " << node_name(e[1], P) << '\n';
    return 1;
  }

  PlanFileMeta meta;
  meta.mesh_hash = off.mesh_hash;
  meta.limits = spec.query.limits;
  meta.planner = spec.query.planner;
  meta.step_time = spec.query.T;
  meta.num_placements = P;
  for (const SegmentPlan& s : mp->segments)
    meta.grasp_ids.push_back(off.grasps.at(s.grasp_index).id);
  write_plan_file(out_path, *mp, meta);

  std::cout << "segments: " << mp->segments.size() << '\n';
  std::string route = node_name(mp->segments.front().from_node, P);
  for (const SegmentPlan& s : mp->segments) route += " -> " + node_name(s.to_node, P);
  std::cout << "route: " << route << '\n';
  std::cout << "total duration s: " << mp->total_duration << '\n';
  for (const auto& e : diag.pruned_edges)
    std::cout << "pruned edge: " << node_name(e[0], P) << " -- " << node_name(e[1], P) << '\n';
  std::cout << "plan written to " << out_path << '\n';
  return 0;
}

int run_validate(const std::string& plan_path, const std::string& cache_path) {
  PlanFile pf = read_plan_file(plan_path);
  OfflineData off = load_offline_cache(cache_path);

  if (pf.meta.mesh_hash != off.mesh_hash) {
    std::cerr << "error: plan was made for mesh hash " << pf.meta.mesh_hash
              << " but the cache holds " << off.mesh_hash << '\n';
    return 2;
  }
  if (pf.meta.num_placements != static_cast<int>(off.placements.size())) {
    std::cerr << "error: plan expects " << pf.meta.num_placements << " placements, cache holds "
              << off.placements.size() << '\n';
    return 2;
  }
  for (size_t s = 0; s < pf.plan.segments.size(); ++s) {
    const int gi = pf.plan.segments[s].grasp_index;
    if (gi < 0 || gi >= static_cast<int>(off.grasps.size()) ||
        off.grasps[gi].id != pf.meta.grasp_ids.at(s)) {
      std::cerr << "error: segment " << s << " references grasp index " << gi << " (id "
                << pf.meta.grasp_ids.at(s) << ") which this cache does not hold\n";
      return 2;
    }
  }
  if (pf.plan.segments.empty()) {
    std::cout << "validation: FAIL: the plan has no segments\n";
    return 1;
  }

  const Pose& initial = pf.plan.segments.front().start_pose;
  const Pose& goal = pf.plan.segments.back().goal_pose;
  ValidationReport rep = validate_plan(pf.plan, off.grasps, initial, goal, off.object_model(),
                                       pf.meta.limits, pf.meta.planner);
  std::cout << rep.to_text() << '\n';
  return rep.ok ? 0 : 1;
}

int run_bench_cmd(const std::string& config_path, const std::string& corpus_dir,
                  const std::string& out_path) {
  BenchConfig cfg = config_path.empty() ? BenchConfig{} : load_bench_config(config_path);

  if (!std::filesystem::is_directory(corpus_dir)) {
    std::cerr << "error: corpus directory " << corpus_dir << " does not exist\n";
    return 2;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(corpus_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".obj" || ext == ".mesh" || ext == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "error: no mesh files (.obj/.mesh/.txt) in " << corpus_dir << '\n';
    return 2;
  }

  std::vector<std::pair<std::string, TriMesh>> objects;
  for (const auto& f : files) {
    log_info("loading " + f.string());
    objects.emplace_back(f.stem().string(), load_mesh(f.string()));
  }

  std::vector<BenchRow> rows = run_bench(objects, cfg);
  const std::string csv = to_csv(rows);
  std::ofstream os(out_path);
  if (!os) throw IOError("cannot open " + out_path + " for writing");
  os << csv;
  if (!os) throw IOError("write to " + out_path + " failed");

  std::cout << "objects: " << objects.size() << '\n';
  std::cout << "rows: " << rows.size() << '\n';
  std::cout << "csv written to " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plan table-top reorientations of a rigid object with a two-finger gripper"};
  app.require_subcommand(1);

  std::string mesh_path, config_path, out_path, spec_path, cache_path, plan_path, corpus_dir;

  CLI::App* pre = app.add_subcommand("preprocess", "build the per-object cache from a mesh");
  pre->add_option("--mesh", mesh_path, "triangle mesh file")->required();
  pre->add_option("--config", config_path, "JSON gripper/graph configuration");
  pre->add_option("--out", out_path, "cache file to write")->required();

  CLI::App* plan = app.add_subcommand("plan", "plan a reorientation from a JSON query");
  plan->add_option("--spec", spec_path, "JSON query: initial/goal poses, limits, planner")
      ->required();
  plan->add_option("--cache", cache_path, "cache file from preprocess")->required();
  plan->add_option("--out", out_path, "plan file to write")->required();

  CLI::App* val = app.add_subcommand("validate", "re-check a plan file against a cache");
  val->add_option("--plan", plan_path, "plan file from plan")->required();
  val->add_option("--cache", cache_path, "cache file from preprocess")->required();

  CLI::App* ben = app.add_subcommand("bench", "sweep tilt caps and methods over a mesh corpus");
  ben->add_option("--config", config_path, "JSON benchmark configuration");
  ben->add_option("--corpus", corpus_dir, "directory of mesh files")->required();
  ben->add_option("--out", out_path, "CSV file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pre->parsed()) return run_preprocess(mesh_path, config_path, out_path);
    if (plan->parsed()) return run_plan(spec_path, cache_path, out_path);
    if (val->parsed()) return run_validate(plan_path, cache_path);
    if (ben->parsed()) return run_bench_cmd(config_path, corpus_dir, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
