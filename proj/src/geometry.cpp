#include "lumen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lumen::geom {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_two_pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

}  // namespace

void BifurcationParams::validate() const {
  require(std::isfinite(diameter) && diameter > 0.0, "diameter", "must be > 0");
  require(std::isfinite(distance_to_bifurcation) && distance_to_bifurcation > 0.0,
          "distance_to_bifurcation", "must be > 0");
  require(std::isfinite(bifurcation_angle) && bifurcation_angle > 0.0 &&
              bifurcation_angle < kPi,
          "bifurcation_angle", "must lie in (0, pi)");
  require(std::isfinite(main_curvature) &&
              std::abs(main_curvature) * diameter / 2.0 < 1.0,
          "main_curvature", "|curvature| * diameter / 2 must be < 1");
  require(std::isfinite(branch_curvature) &&
              std::abs(branch_curvature) * diameter / 2.0 < 1.0,
          "branch_curvature", "|curvature| * diameter / 2 must be < 1");
  require(std::isfinite(main_length_after) && main_length_after > 0.0,
          "main_length_after", "must be > 0");
  require(std::isfinite(branch_length) && branch_length > 0.0, "branch_length",
          "must be > 0");
}

void GoalSpec::validate() const {
  require(std::isfinite(arclength_fraction) && arclength_fraction > 0.0 &&
              arclength_fraction <= 1.0,
          "goal.arclength_fraction", "must lie in (0, 1]");
  if (radius) {
    require(std::isfinite(*radius) && *radius > 0.0, "goal.radius", "must be > 0");
  }
}

ArcPoint point_on_arc(const CenterlineArc& arc, double s) {
  if (s < 0.0 || s > arc.arclength) {
    throw std::out_of_range("arclength parameter outside [0, arclength]");
  }
  if (arc.curvature == 0.0) {
    return {arc.start + s * arc.start_tangent, arc.start_tangent};
  }
  // Circle center sits at signed radius 1/kappa along the left normal, so
  // positive curvature bends left of the tangent.
  const Vec2 center = arc.start + arc.start_tangent.perp() / arc.curvature;
  const double phi = arc.curvature * s;
  return {center + (arc.start - center).rotated(phi), arc.start_tangent.rotated(phi)};
}

NearestPoint nearest_on_arc(const CenterlineArc& arc, Vec2 p) {
  if (arc.curvature == 0.0) {
    const double t = std::clamp(dot(p - arc.start, arc.start_tangent), 0.0, arc.arclength);
    const Vec2 q = arc.start + t * arc.start_tangent;
    return {distance(p, q), t, q};
  }

  const Vec2 center = arc.start + arc.start_tangent.perp() / arc.curvature;
  const double r = 1.0 / std::abs(arc.curvature);
  const Vec2 v = p - center;
  const double vn = v.norm();
  const double sweep = std::abs(arc.curvature) * arc.arclength;

  if (vn > 1e-12 && sweep < kTwoPi) {
    // Angle of p around the center, measured from the arc start in the
    // direction of travel. Inside the sweep the nearest point is the radial
    // projection; otherwise one of the endpoints wins.
    const Vec2 u0 = arc.start - center;
    const double a0 = std::atan2(u0.y, u0.x);
    const double ap = std::atan2(v.y, v.x);
    const double along = arc.curvature > 0.0 ? wrap_two_pi(ap - a0) : wrap_two_pi(a0 - ap);
    if (along <= sweep) {
      const double s = along / std::abs(arc.curvature);
      const Vec2 q = center + v * (r / vn);
      return {distance(p, q), s, q};
    }
  } else if (vn > 1e-12) {
    // Arc covers the full circle: radial projection always lies on it.
    const Vec2 q = center + v * (r / vn);
    const double along = arc.curvature > 0.0
                             ? wrap_two_pi(std::atan2(v.y, v.x) -
                                           std::atan2(arc.start.y - center.y,
                                                      arc.start.x - center.x))
                             : wrap_two_pi(std::atan2(arc.start.y - center.y,
                                                      arc.start.x - center.x) -
                                           std::atan2(v.y, v.x));
    return {distance(p, q), std::min(along / std::abs(arc.curvature), arc.arclength), q};
  }

  // Endpoint clamp (also the p == center degenerate case).
  const Vec2 q0 = arc.start;
  const Vec2 q1 = point_on_arc(arc, arc.arclength).point;
  const double d0 = distance(p, q0);
  const double d1 = distance(p, q1);
  if (d0 <= d1) return {d0, 0.0, q0};
  return {d1, arc.arclength, q1};
}

LumenMap generate_bifurcation(const BifurcationParams& params, const GoalSpec& goal) {
  params.validate();
  goal.validate();

  LumenMap map;
  map.radius = params.diameter / 2.0;
  map.entry_pose = Pose2{{0.0, 0.0}, 0.0};
  map.source_params = params;

  const CenterlineArc main_pre{{0.0, 0.0}, {1.0, 0.0}, params.main_curvature,
                               params.distance_to_bifurcation};
  const auto branch_pt = point_on_arc(main_pre, main_pre.arclength);
  const CenterlineArc main_post{branch_pt.point, branch_pt.tangent, params.main_curvature,
                                params.main_length_after};
  const CenterlineArc branch{branch_pt.point,
                             branch_pt.tangent.rotated(params.bifurcation_angle),
                             params.branch_curvature, params.branch_length};
  map.arcs = {main_pre, main_post, branch};

  const CenterlineArc& goal_arc = goal.branch == GoalBranch::Branch ? branch : main_post;
  map.goal_branch = goal.branch;
  map.goal_center =
      point_on_arc(goal_arc, goal.arclength_fraction * goal_arc.arclength).point;
  map.goal_radius = goal.radius.value_or(params.diameter);
  return map;
}

void ParamRanges::validate() const {
  const auto check = [](const Interval& iv, const std::string& field) {
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo <= iv.hi)) {
      throw InfeasibleRange("ranges." + field, "empty or non-finite interval");
    }
  };
  check(diameter, "diameter");
  check(main_curvature, "main_curvature");
  check(distance_to_bifurcation, "distance_to_bifurcation");
  check(branch_curvature, "branch_curvature");
  check(bifurcation_angle, "bifurcation_angle");
  if (main_length_after) check(*main_length_after, "main_length_after");
  if (branch_length) check(*branch_length, "branch_length");

  if (diameter.lo <= 0.0) {
    throw InfeasibleRange("ranges.diameter", "admits non-positive diameters");
  }
  if (distance_to_bifurcation.lo <= 0.0) {
    throw InfeasibleRange("ranges.distance_to_bifurcation", "admits non-positive distances");
  }
  if (bifurcation_angle.lo <= 0.0 || bifurcation_angle.hi >= kPi) {
    throw InfeasibleRange("ranges.bifurcation_angle", "must stay within (0, pi)");
  }
  const double max_kappa =
      std::max({std::abs(main_curvature.lo), std::abs(main_curvature.hi),
                std::abs(branch_curvature.lo), std::abs(branch_curvature.hi)});
  if (max_kappa * diameter.hi / 2.0 >= 1.0) {
    throw InfeasibleRange("ranges.main_curvature",
                          "curvature range self-intersects the widest tube");
  }
  if (main_length_after && main_length_after->lo <= 0.0) {
    throw InfeasibleRange("ranges.main_length_after", "admits non-positive lengths");
  }
  if (branch_length && branch_length->lo <= 0.0) {
    throw InfeasibleRange("ranges.branch_length", "admits non-positive lengths");
  }
}

BifurcationParams sample_params(const ParamRanges& ranges, Rng& rng) {
  ranges.validate();

  BifurcationParams p;
  p.diameter = uniform_in(rng, ranges.diameter.lo, ranges.diameter.hi);
  p.main_curvature = uniform_in(rng, ranges.main_curvature.lo, ranges.main_curvature.hi);
  p.distance_to_bifurcation = uniform_in(rng, ranges.distance_to_bifurcation.lo,
                                         ranges.distance_to_bifurcation.hi);
  p.branch_curvature =
      uniform_in(rng, ranges.branch_curvature.lo, ranges.branch_curvature.hi);
  p.bifurcation_angle =
      uniform_in(rng, ranges.bifurcation_angle.lo, ranges.bifurcation_angle.hi);
  p.main_length_after = ranges.main_length_after
                            ? uniform_in(rng, ranges.main_length_after->lo,
                                         ranges.main_length_after->hi)
                            : 2.0 * p.distance_to_bifurcation;
  p.branch_length =
      ranges.branch_length
          ? uniform_in(rng, ranges.branch_length->lo, ranges.branch_length->hi)
          : 2.0 * p.distance_to_bifurcation;
  p.validate();
  return p;
}

PenetrationResult penetration(const LumenMap& map, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_point;
  for (const CenterlineArc& arc : map.arcs) {
    const NearestPoint np = nearest_on_arc(arc, p);
    if (np.distance < best) {
      best = np.distance;
      best_point = np.point;
    }
  }

  const double depth = best - map.radius;
  if (depth <= 0.0) return {};

  const Vec2 direction = (p - best_point) / best;
  return {depth, direction, depth * direction};
}

bool in_goal(const LumenMap& map, Vec2 p) {
  return distance(p, map.goal_center) <= map.goal_radius;
}

PreparedLumen::PreparedLumen(const LumenMap& map) : radius_(map.radius) {
  arcs_.reserve(map.arcs.size());
  for (const CenterlineArc& arc : map.arcs) {
    PreparedArc pa;
    pa.start = arc.start;
    pa.length = arc.arclength;
    if (arc.curvature == 0.0) {
      pa.tangent = arc.start_tangent;
      pa.end = arc.start + arc.arclength * arc.start_tangent;
    } else {
      pa.straight = false;
      pa.center = arc.start + arc.start_tangent.perp() / arc.curvature;
      pa.r = 1.0 / std::abs(arc.curvature);
      pa.u0 = arc.start - pa.center;
      pa.end = point_on_arc(arc, arc.arclength).point;
      pa.u1 = pa.end - pa.center;
      pa.ccw = arc.curvature > 0.0;
      const double sweep = std::abs(arc.curvature) * arc.arclength;
      pa.major = sweep > kPi;
      pa.full = sweep >= kTwoPi;
    }
    arcs_.push_back(pa);
  }
}

PenetrationResult PreparedLumen::penetration(Vec2 p) const {
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_point;
  for (const PreparedArc& arc : arcs_) {
    double d;
    Vec2 q;
    if (arc.straight) {
      const double t = std::clamp(dot(p - arc.start, arc.tangent), 0.0, arc.length);
      q = arc.start + t * arc.tangent;
      d = distance(p, q);
    } else {
      const Vec2 v = p - arc.center;
      const double vn = v.norm();
      bool radial = false;
      if (vn > 1e-12) {
        if (arc.full) {
          radial = true;
        } else {
          // Sweep membership via the half-planes of the two end radii; the
          // minor/major split picks AND vs OR of the two sign tests.
          const double c0 = arc.ccw ? cross(arc.u0, v) : cross(v, arc.u0);
          const double c1 = arc.ccw ? cross(v, arc.u1) : cross(arc.u1, v);
          radial = arc.major ? (c0 >= 0.0 || c1 >= 0.0) : (c0 >= 0.0 && c1 >= 0.0);
        }
      }
      if (radial) {
        q = arc.center + v * (arc.r / vn);
        d = std::abs(vn - arc.r);
      } else {
        const double d0 = distance(p, arc.start);
        const double d1 = distance(p, arc.end);
        if (d0 <= d1) {
          d = d0;
          q = arc.start;
        } else {
          d = d1;
          q = arc.end;
        }
      }
    }
    if (d < best) {
      best = d;
      best_point = q;
    }
  }

  const double depth = best - radius_;
  if (depth <= 0.0) return {};

  const Vec2 direction = (p - best_point) / best;
  return {depth, direction, depth * direction};
}

namespace {

nlohmann::json vec_to_json(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

Vec2 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw SchemaError("expected a [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing field: ") + key);
  return *it;
}

}  // namespace

nlohmann::json to_json(const BifurcationParams& p) {
  return {{"diameter", p.diameter},
          {"main_curvature", p.main_curvature},
          {"distance_to_bifurcation", p.distance_to_bifurcation},
          {"branch_curvature", p.branch_curvature},
          {"bifurcation_angle", p.bifurcation_angle},
          {"main_length_after", p.main_length_after},
          {"branch_length", p.branch_length}};
}

BifurcationParams params_from_json(const nlohmann::json& j) {
  BifurcationParams p;
  p.diameter = field(j, "diameter").get<double>();
  p.main_curvature = field(j, "main_curvature").get<double>();
  p.distance_to_bifurcation = field(j, "distance_to_bifurcation").get<double>();
  p.branch_curvature = field(j, "branch_curvature").get<double>();
  p.bifurcation_angle = field(j, "bifurcation_angle").get<double>();
  p.main_length_after = field(j, "main_length_after").get<double>();
  p.branch_length = field(j, "branch_length").get<double>();
  return p;
}

nlohmann::json to_json(const LumenMap& map) {
  nlohmann::json arcs = nlohmann::json::array();
  for (const CenterlineArc& arc : map.arcs) {
    arcs.push_back({{"start", vec_to_json(arc.start)},
                    {"tangent", vec_to_json(arc.start_tangent)},
                    {"curvature", arc.curvature},
                    {"arclength", arc.arclength}});
  }
  nlohmann::json j = {
      {"schema_version", 1},
      {"arcs", std::move(arcs)},
      {"radius", map.radius},
      {"entry_pose",
       {{"position", vec_to_json(map.entry_pose.position)},
        {"heading", map.entry_pose.heading}}},
      {"goal",
       {{"center", vec_to_json(map.goal_center)},
        {"radius", map.goal_radius},
        {"branch", map.goal_branch == GoalBranch::Branch ? "branch" : "main"}}},
  };
  if (map.source_params) j["source_params"] = to_json(*map.source_params);
  return j;
}

LumenMap lumen_map_from_json(const nlohmann::json& j) {
  if (field(j, "schema_version").get<int>() != 1) {
    throw SchemaError("unsupported lumen map schema_version");
  }

  LumenMap map;
  map.radius = field(j, "radius").get<double>();
  if (!(map.radius > 0.0)) throw SchemaError("radius must be > 0");

  for (const auto& ja : field(j, "arcs")) {
    CenterlineArc arc;
    arc.start = vec_from_json(field(ja, "start"));
    arc.start_tangent = vec_from_json(field(ja, "tangent"));
    arc.curvature = field(ja, "curvature").get<double>();
    arc.arclength = field(ja, "arclength").get<double>();
    if (!(arc.arclength > 0.0)) throw SchemaError("arclength must be > 0");
    if (std::abs(arc.start_tangent.norm() - 1.0) > 1e-9) {
      throw SchemaError("arc tangent must be a unit vector");
    }
    map.arcs.push_back(arc);
  }
  if (map.arcs.empty()) throw SchemaError("lumen map needs at least one arc");

  const auto& jp = field(j, "entry_pose");
  map.entry_pose.position = vec_from_json(field(jp, "position"));
  map.entry_pose.heading = field(jp, "heading").get<double>();

  const auto& jg = field(j, "goal");
  map.goal_center = vec_from_json(field(jg, "center"));
  map.goal_radius = field(jg, "radius").get<double>();
  if (!(map.goal_radius > 0.0)) throw SchemaError("goal radius must be > 0");
  const std::string branch = field(jg, "branch").get<std::string>();
  if (branch == "branch") {
    map.goal_branch = GoalBranch::Branch;
  } else if (branch == "main") {
    map.goal_branch = GoalBranch::Main;
  } else {
    throw SchemaError("goal branch must be \"main\" or \"branch\"");
  }

  if (j.contains("source_params")) {
    map.source_params = params_from_json(j["source_params"]);
  }
  return map;
}

}  // namespace lumen::geom
