#include "pivot/serialize.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace pivot {
namespace {

using nlohmann::json;

constexpr const char* kCacheFormat = "pivotplan-cache";
constexpr int kCacheVersion = 1;
constexpr const char* kPlanMagic = "pivotplan";
constexpr int kPlanVersion = 1;

// --- JSON helpers -----------------------------------------------------------

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json to_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Vec3 vec3_of(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
  return Vec3{j[0].get<Real>(), j[1].get<Real>(), j[2].get<Real>()};
}

Vec2 vec2_of(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected a 2-vector");
  return Vec2{j[0].get<Real>(), j[1].get<Real>()};
}

Quat quat_of(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("expected a quaternion [w,x,y,z]");
  Quat q{j[0].get<Real>(), j[1].get<Real>(), j[2].get<Real>(), j[3].get<Real>()};
  if (q.norm() < 1e-9) throw ParseError("zero quaternion");
  return q.normalized();
}

Pose pose_of(const json& j) {
  if (!j.contains("orientation") || !j.contains("position"))
    throw ParseError("pose needs \"orientation\" [w,x,y,z] and \"position\" [x,y,z]");
  return Pose{quat_of(j.at("orientation")), vec3_of(j.at("position"))};
}

template <typename T>
void maybe(const json& j, const char* key, T& value) {
  if (j.contains(key)) j.at(key).get_to(value);
}

void maybe_vec3(const json& j, const char* key, Vec3& value) {
  if (j.contains(key)) value = vec3_of(j.at(key));
}

void maybe_deg(const json& j, const char* key, Real& radians) {
  if (j.contains(key)) radians = deg2rad(j.at(key).get<Real>());
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IOError("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IOError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw IOError("write to " + path + " failed");
}

MatX3 matx3_of(const json& j) {
  MatX3 m(static_cast<int>(j.size()), 3);
  for (int i = 0; i < m.rows(); ++i) {
    Vec3 v = vec3_of(j[i]);
    m.row(i) = v.transpose();
  }
  return m;
}

json to_json(const MatX3& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec3(m.row(i).transpose())));
  return rows;
}

// --- sub-config loaders -----------------------------------------------------

void load_into(const json& j, GripperModel& g) {
  maybe(j, "stroke", g.stroke);
  maybe(j, "finger_width", g.finger_width);
  maybe(j, "finger_thickness", g.finger_thickness);
  maybe(j, "finger_length", g.finger_length);
  maybe(j, "palm_width", g.palm_width);
  maybe(j, "palm_depth", g.palm_depth);
  maybe(j, "tip_clearance", g.tip_clearance);
  maybe(j, "contact_gap", g.contact_gap);
  maybe(j, "finger_mu", g.finger_mu);
}

void load_into(const json& j, GraspSamplingParams& s) {
  maybe(j, "max_n", s.max_n);
  maybe_deg(j, "antipodal_tol_deg", s.antipodal_tol);
  maybe(j, "trim_frac", s.trim_frac);
  maybe(j, "min_width", s.min_width);
  maybe(j, "interior_margin", s.interior_margin);
  maybe(j, "seed", s.seed);
}

void load_into(const json& j, GraphConfig& g) {
  if (j.contains("gripper")) load_into(j.at("gripper"), g.gripper);
  if (j.contains("sampling")) load_into(j.at("sampling"), g.sampling);
  maybe(j, "simplify_bound", g.simplify_bound);
  maybe(j, "support_margin", g.support_margin);
  maybe(j, "body_table_margin", g.body_table_margin);
  maybe(j, "angle_step_deg", g.angle_step_deg);
  maybe(j, "regrasp_clearance", g.regrasp_clearance);
}

void load_into(const json& j, WorkspaceLimits& w) {
  maybe_vec3(j, "box_min", w.box_min);
  maybe_vec3(j, "box_max", w.box_max);
  maybe_deg(j, "theta_max_deg", w.theta_max);
  maybe(j, "table_clearance", w.table_clearance);
}

void load_into(const json& j, PlannerConfig& p) {
  maybe(j, "k", p.k);
  maybe(j, "xi", p.xi);
  maybe(j, "mu", p.mu);
  maybe(j, "com_radius", p.com_radius);
  maybe(j, "pose_err", p.pose_err);
  maybe(j, "force_rolling", p.force_rolling);
}

// --- plan-file text helpers -------------------------------------------------

const char* mode_name(Mode m) { return m == Mode::Pivoting ? "pivoting" : "rolling"; }

const char* slide_name(SlideClass s) {
  switch (s) {
    case SlideClass::S1: return "S1";
    case SlideClass::S2: return "S2";
    case SlideClass::S3: return "S3";
  }
  return "S3";
}

Mode mode_of(const std::string& s) {
  if (s == "pivoting") return Mode::Pivoting;
  if (s == "rolling") return Mode::Rolling;
  throw ParseError("unknown increment mode \"" + s + "\"");
}

SlideClass slide_of(const std::string& s) {
  if (s == "S1") return SlideClass::S1;
  if (s == "S2") return SlideClass::S2;
  if (s == "S3") return SlideClass::S3;
  throw ParseError("unknown sliding class \"" + s + "\"");
}

void put_pose(std::ostream& os, const Pose& p) {
  const Quat& q = p.orientation;
  os << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << q.w() << ' '
     << q.x() << ' ' << q.y() << ' ' << q.z();
}

/// Token-stream reader with keyword checking; every failure names the
/// offending keyword so parse errors are actionable.
struct TokenReader {
  std::istringstream is;

  explicit TokenReader(std::string text) : is(std::move(text)) {}

  std::string word(const char* what) {
    std::string s;
    if (!(is >> s)) throw ParseError(std::string("unexpected end of plan file, wanted ") + what);
    return s;
  }
  void expect(const char* keyword) {
    std::string s = word(keyword);
    if (s != keyword)
      throw ParseError("expected \"" + std::string(keyword) + "\", found \"" + s + "\"");
  }
  Real real(const char* what) {
    Real v;
    if (!(is >> v)) throw ParseError(std::string("expected a number for ") + what);
    return v;
  }
  int integer(const char* what) {
    int v;
    if (!(is >> v)) throw ParseError(std::string("expected an integer for ") + what);
    return v;
  }
  uint64_t u64(const char* what) {
    uint64_t v;
    if (!(is >> v)) throw ParseError(std::string("expected an unsigned integer for ") + what);
    return v;
  }
  Pose pose(const char* what) {
    Pose p;
    p.position = Vec3{real(what), real(what), real(what)};
    Real w = real(what), x = real(what), y = real(what), z = real(what);
    p.orientation = Quat{w, x, y, z};
    if (p.orientation.norm() < 1e-9) throw ParseError(std::string("zero quaternion in ") + what);
    p.orientation.normalize();
    return p;
  }
};

}  // namespace

// --- offline cache ----------------------------------------------------------

void save_offline_cache(const std::string& path, const OfflineData& off) {
  json j;
  j["format"] = kCacheFormat;
  j["version"] = kCacheVersion;
  j["mesh_hash"] = off.mesh_hash;
  j["d_H"] = off.d_H;
  j["com"] = to_json(off.com);

  json hull;
  hull["vertices"] = to_json(off.hull.V);
  hull["facets"] = off.hull.facets;
  hull["normals"] = to_json(off.hull.normals);
  hull["offsets"] = std::vector<Real>(off.hull.offsets.data(),
                                      off.hull.offsets.data() + off.hull.offsets.size());
  j["hull"] = std::move(hull);

  json grasps = json::array();
  for (const Grasp& g : off.grasps) {
    grasps.push_back({{"id", g.id},
                      {"p_left", to_json(g.p_left)},
                      {"p_right", to_json(g.p_right)},
                      {"n_left", to_json(g.n_left)},
                      {"n_right", to_json(g.n_right)}});
  }
  j["grasps"] = std::move(grasps);

  json clearance = json::array();
  for (const auto& intervals : off.clearance) {
    json list = json::array();
    for (const AngleInterval& iv : intervals) list.push_back(json::array({iv.lo, iv.hi}));
    clearance.push_back(std::move(list));
  }
  j["clearance"] = std::move(clearance);

  json placements = json::array();
  for (const StablePlacement& pl : off.placements) {
    json poly = json::array();
    for (const Vec2& v : pl.support_polygon) poly.push_back(to_json(v));
    placements.push_back({{"id", pl.id},
                          {"facet", pl.facet},
                          {"orientation", to_json(pl.rest_orientation)},
                          {"rest_height", pl.rest_height},
                          {"support_polygon", std::move(poly)}});
  }
  j["placements"] = std::move(placements);

  j["feasible"] = off.feasible;
  json adjacency = json::array();
  for (const auto& row : off.adjacency) {
    json r = json::array();
    for (uint8_t v : row) r.push_back(static_cast<int>(v));
    adjacency.push_back(std::move(r));
  }
  j["adjacency"] = std::move(adjacency);

  write_text_file(path, j.dump(1, '\t') + "\n");
}

OfflineData load_offline_cache(const std::string& path) {
  json j = read_json_file(path);
  try {
    if (!j.contains("format") || j.at("format") != kCacheFormat)
      throw ParseError(path + ": not an offline cache file");
    if (j.at("version").get<int>() != kCacheVersion)
      throw ParseError(path + ": unsupported cache version");

    OfflineData off;
    off.mesh_hash = j.at("mesh_hash").get<uint64_t>();
    off.d_H = j.at("d_H").get<Real>();
    off.com = vec3_of(j.at("com"));

    const json& hull = j.at("hull");
    off.hull.V = matx3_of(hull.at("vertices"));
    hull.at("facets").get_to(off.hull.facets);
    off.hull.normals = matx3_of(hull.at("normals"));
    std::vector<Real> offsets;
    hull.at("offsets").get_to(offsets);
    off.hull.offsets = Eigen::Map<const VecX>(offsets.data(), offsets.size());
    if (off.hull.normals.rows() != static_cast<int>(off.hull.facets.size()) ||
        off.hull.offsets.size() != static_cast<int>(off.hull.facets.size()))
      throw ParseError(path + ": hull facet/normal/offset counts disagree");

    for (const json& g : j.at("grasps")) {
      Grasp grasp;
      grasp.id = g.at("id").get<int>();
      grasp.p_left = vec3_of(g.at("p_left"));
      grasp.p_right = vec3_of(g.at("p_right"));
      grasp.n_left = vec3_of(g.at("n_left"));
      grasp.n_right = vec3_of(g.at("n_right"));
      off.grasps.push_back(grasp);
    }

    for (const json& list : j.at("clearance")) {
      std::vector<AngleInterval> intervals;
      for (const json& iv : list) {
        if (!iv.is_array() || iv.size() != 2) throw ParseError(path + ": bad clearance interval");
        intervals.push_back(AngleInterval{iv[0].get<Real>(), iv[1].get<Real>()});
      }
      off.clearance.push_back(std::move(intervals));
    }
    if (off.clearance.size() != off.grasps.size())
      throw ParseError(path + ": clearance list does not match the grasp list");

    for (const json& p : j.at("placements")) {
      StablePlacement pl;
      pl.id = p.at("id").get<int>();
      pl.facet = p.at("facet").get<int>();
      pl.rest_orientation = quat_of(p.at("orientation"));
      pl.rest_height = p.at("rest_height").get<Real>();
      for (const json& v : p.at("support_polygon")) pl.support_polygon.push_back(vec2_of(v));
      off.placements.push_back(std::move(pl));
    }

    j.at("feasible").get_to(off.feasible);
    for (const json& row : j.at("adjacency")) {
      std::vector<uint8_t> r;
      for (const json& v : row) r.push_back(static_cast<uint8_t>(v.get<int>()));
      off.adjacency.push_back(std::move(r));
    }
    const size_t P = off.placements.size();
    if (off.feasible.size() != P || off.adjacency.size() != P)
      throw ParseError(path + ": per-placement tables do not match the placement list");
    for (const auto& row : off.adjacency)
      if (row.size() != P) throw ParseError(path + ": adjacency matrix is not square");
    return off;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// --- configuration files ----------------------------------------------------

GraphConfig load_graph_config(const std::string& path) {
  json j = read_json_file(path);
  GraphConfig cfg;
  try {
    load_into(j, cfg);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return cfg;
}

namespace {

PlanQuery plan_query_of(const json& j, const std::string& path) {
  PlanQuery q;
  try {
    if (!j.contains("initial") || !j.contains("goal"))
      throw ParseError(path + ": a plan query needs \"initial\" and \"goal\" poses");
    q.initial = pose_of(j.at("initial"));
    q.goal = pose_of(j.at("goal"));
    if (j.contains("limits")) load_into(j.at("limits"), q.limits);
    if (j.contains("planner")) load_into(j.at("planner"), q.planner);
    maybe(j, "n_steps", q.N);
    maybe(j, "step_time", q.T);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (q.N < 2) throw ParseError(path + ": n_steps must be at least 2");
  if (!(q.T > 0)) throw ParseError(path + ": step_time must be positive");
  return q;
}

}  // namespace

PlanQuery load_plan_query(const std::string& path) {
  return plan_query_of(read_json_file(path), path);
}

PlanSpec load_plan_spec(const std::string& path) {
  json j = read_json_file(path);
  PlanSpec spec;
  spec.query = plan_query_of(j, path);
  try {
    if (j.contains("graph")) load_into(j.at("graph"), spec.graph);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return spec;
}

BenchConfig load_bench_config(const std::string& path) {
  json j = read_json_file(path);
  BenchConfig cfg;
  try {
    maybe(j, "seed", cfg.seed);
    maybe(j, "problems_per_object", cfg.problems_per_object);
    maybe(j, "theta_max_deg", cfg.theta_max_deg);
    maybe(j, "n_steps", cfg.n_steps);
    maybe(j, "step_time", cfg.step_time);
    maybe(j, "target_extent", cfg.target_extent);
    if (j.contains("limits")) load_into(j.at("limits"), cfg.limits);
    if (j.contains("planner")) load_into(j.at("planner"), cfg.planner);
    if (j.contains("graph")) load_into(j.at("graph"), cfg.graph);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (cfg.theta_max_deg.empty()) throw ParseError(path + ": theta_max_deg must not be empty");
  if (cfg.problems_per_object < 1)
    throw ParseError(path + ": problems_per_object must be positive");
  return cfg;
}

// --- plan files ---------------------------------------------------------------

void write_plan_file(const std::string& path, const MultiStepPlan& plan,
                     const PlanFileMeta& meta) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << kPlanMagic << ' ' << kPlanVersion << '\n';
  os << "mesh_hash " << meta.mesh_hash << '\n';
  os << "num_placements " << meta.num_placements << '\n';
  const WorkspaceLimits& w = meta.limits;
  os << "limits " << w.box_min.x() << ' ' << w.box_min.y() << ' ' << w.box_min.z() << ' '
     << w.box_max.x() << ' ' << w.box_max.y() << ' ' << w.box_max.z() << ' ' << w.theta_max << ' '
     << w.table_clearance << '\n';
  const PlannerConfig& p = meta.planner;
  os << "planner " << p.k << ' ' << p.xi << ' ' << p.mu << ' ' << p.com_radius << ' '
     << p.pose_err << ' ' << (p.force_rolling ? 1 : 0) << '\n';
  os << "step_time " << meta.step_time << '\n';
  os << "total_duration " << plan.total_duration << '\n';
  os << "segments " << plan.segments.size() << '\n';
  os << "waypoints " << plan.regrasp_waypoints.size() << '\n';

  for (size_t s = 0; s < plan.segments.size(); ++s) {
    const SegmentPlan& seg = plan.segments[s];
    const int placement = seg.to_node < meta.num_placements ? seg.to_node : -1;
    const int grasp_id = s < meta.grasp_ids.size() ? meta.grasp_ids[s] : -1;
    os << "segment " << s << " from " << seg.from_node << " to " << seg.to_node << " placement "
       << placement << " grasp_index " << seg.grasp_index << " grasp_id " << grasp_id << '\n';
    os << "duration " << seg.plan.duration << " path_length " << seg.plan.path_length
       << " rotation " << seg.plan.total_rotation << '\n';
    os << "start ";
    put_pose(os, seg.start_pose);
    os << '\n';
    os << "goal ";
    put_pose(os, seg.goal_pose);
    os << '\n';
    os << "steps " << seg.plan.steps.size() << '\n';
    for (const StepPlan& st : seg.plan.steps) {
      os << "step " << st.index << ' ' << mode_name(st.mode) << ' ';
      put_pose(os, st.gripper);
      os << ' ' << slide_name(st.slide) << '\n';
    }
  }
  for (const Pose& wp : plan.regrasp_waypoints) {
    os << "waypoint ";
    put_pose(os, wp);
    os << '\n';
  }
  write_text_file(path, os.str());
}

PlanFile read_plan_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IOError("cannot open " + path);
  std::stringstream buffer;
  buffer << is.rdbuf();
  TokenReader t(buffer.str());

  PlanFile f;
  t.expect(kPlanMagic);
  if (t.integer("format version") != kPlanVersion)
    throw ParseError(path + ": unsupported plan file version");
  t.expect("mesh_hash");
  f.meta.mesh_hash = t.u64("mesh_hash");
  t.expect("num_placements");
  f.meta.num_placements = t.integer("num_placements");
  t.expect("limits");
  f.meta.limits.box_min = Vec3{t.real("limits"), t.real("limits"), t.real("limits")};
  f.meta.limits.box_max = Vec3{t.real("limits"), t.real("limits"), t.real("limits")};
  f.meta.limits.theta_max = t.real("limits");
  f.meta.limits.table_clearance = t.real("limits");
  t.expect("planner");
  f.meta.planner.k = t.real("planner");
  f.meta.planner.xi = t.real("planner");
  f.meta.planner.mu = t.real("planner");
  f.meta.planner.com_radius = t.real("planner");
  f.meta.planner.pose_err = t.real("planner");
  f.meta.planner.force_rolling = t.integer("planner") != 0;
  t.expect("step_time");
  f.meta.step_time = t.real("step_time");
  t.expect("total_duration");
  f.plan.total_duration = t.real("total_duration");
  t.expect("segments");
  const int num_segments = t.integer("segments");
  t.expect("waypoints");
  const int num_waypoints = t.integer("waypoints");
  if (num_segments < 0 || num_waypoints < 0) throw ParseError(path + ": negative section count");

  for (int s = 0; s < num_segments; ++s) {
    SegmentPlan seg;
    t.expect("segment");
    if (t.integer("segment index") != s) throw ParseError(path + ": segments out of order");
    t.expect("from");
    seg.from_node = t.integer("from");
    t.expect("to");
    seg.to_node = t.integer("to");
    t.expect("placement");
    t.integer("placement");  // redundant with to_node; kept for readability
    t.expect("grasp_index");
    seg.grasp_index = t.integer("grasp_index");
    t.expect("grasp_id");
    f.meta.grasp_ids.push_back(t.integer("grasp_id"));
    t.expect("duration");
    seg.plan.duration = t.real("duration");
    t.expect("path_length");
    seg.plan.path_length = t.real("path_length");
    t.expect("rotation");
    seg.plan.total_rotation = t.real("rotation");
    t.expect("start");
    seg.start_pose = t.pose("start pose");
    t.expect("goal");
    seg.goal_pose = t.pose("goal pose");
    t.expect("steps");
    const int num_steps = t.integer("steps");
    if (num_steps < 0) throw ParseError(path + ": negative step count");
    for (int i = 0; i < num_steps; ++i) {
      StepPlan st;
      t.expect("step");
      st.index = t.integer("step index");
      st.mode = mode_of(t.word("increment mode"));
      st.gripper = t.pose("step pose");
      st.slide = slide_of(t.word("sliding class"));
      seg.plan.steps.push_back(st);
    }
    f.plan.segments.push_back(std::move(seg));
  }
  for (int i = 0; i < num_waypoints; ++i) {
    t.expect("waypoint");
    f.plan.regrasp_waypoints.push_back(t.pose("waypoint pose"));
  }
  std::string trailing;
  if (t.is >> trailing) throw ParseError(path + ": trailing content \"" + trailing + "\"");
  return f;
}

}  // namespace pivot
