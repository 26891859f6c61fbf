#pragma once

#include <json.hpp>

#include <optional>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/rng.hpp"
#include "lumen/vec2.hpp"

namespace lumen::geom {

// The five bifurcation parameters plus the two lumen extents past the branch
// point. Curvature is stored as kappa = 1/radius; 0 means straight, positive
// bends left of the tangent.
struct BifurcationParams {
  double diameter = 1.0;
  double main_curvature = 0.0;
  double distance_to_bifurcation = 5.0;
  double branch_curvature = 0.0;
  double bifurcation_angle = 0.7;
  double main_length_after = 10.0;
  double branch_length = 10.0;

  // Throws ValidationError naming the offending field.
  void validate() const;

  bool operator==(const BifurcationParams&) const = default;
};

// Constant-curvature centerline piece. kappa = 0 evaluates as a straight
// segment; otherwise the arc turns left (kappa > 0) or right (kappa < 0).
struct CenterlineArc {
  Vec2 start;
  Vec2 start_tangent{1.0, 0.0};
  double curvature = 0.0;
  double arclength = 1.0;

  bool operator==(const CenterlineArc&) const = default;
};

struct ArcPoint {
  Vec2 point;
  Vec2 tangent;
};

// Point and tangent at arclength s in [0, arc.arclength].
// Throws std::out_of_range for s outside that interval.
ArcPoint point_on_arc(const CenterlineArc& arc, double s);

struct NearestPoint {
  double distance = 0.0;
  double s = 0.0;  // arclength of the nearest centerline point
  Vec2 point;
};

// Closest point on the arc (endpoints clamped) to p.
NearestPoint nearest_on_arc(const CenterlineArc& arc, Vec2 p);

struct PenetrationResult {
  double depth = 0.0;
  Vec2 direction;     // unit, outward from the lumen interior; zero if depth = 0
  Vec2 displacement;  // depth * direction
};

enum class GoalBranch { Main, Branch };

// How generate_bifurcation places the goal disk: along which lumen, at which
// fraction of its post-branch arclength, and with which radius (defaults to
// the lumen diameter when unset).
struct GoalSpec {
  GoalBranch branch = GoalBranch::Branch;
  double arclength_fraction = 0.6;
  std::optional<double> radius;

  void validate() const;
};

// Realized environment: three centerline arcs (main pre-branch, main
// post-branch, branch), a shared tube radius, the robot entry pose and the
// goal disk. Immutable after construction; all queries are pure.
struct LumenMap {
  std::vector<CenterlineArc> arcs;
  double radius = 0.5;
  Pose2 entry_pose;
  Vec2 goal_center;
  double goal_radius = 1.0;
  GoalBranch goal_branch = GoalBranch::Branch;
  std::optional<BifurcationParams> source_params;

  double diameter() const { return 2.0 * radius; }

  bool operator==(const LumenMap&) const = default;
};

// Builds the map at the origin with entry heading +x. The branch tangent is
// the main tangent at the branch point rotated by +bifurcation_angle.
LumenMap generate_bifurcation(const BifurcationParams& params, const GoalSpec& goal = {});

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  bool operator==(const Interval&) const = default;
};

// Per-field sampling intervals. The two extent intervals are optional; when
// unset each extent defaults to 2x the sampled distance_to_bifurcation.
// Defaults are sized against the default robot (link_length 0.5): diameters
// of 0.8-1.5 link lengths so the walls actually guide the body, and goals
// that stay within the maximum insertion depth.
struct ParamRanges {
  Interval diameter{0.4, 0.75};
  Interval main_curvature{-0.16, 0.16};
  Interval distance_to_bifurcation{2.0, 4.0};
  Interval branch_curvature{-0.16, 0.16};
  Interval bifurcation_angle{0.5235987755982988, 1.2566370614359172};  // [pi/6, pi/2.5]
  std::optional<Interval> main_length_after;
  std::optional<Interval> branch_length;

  // Throws InfeasibleRange if some interval admits no valid parameter value.
  void validate() const;

  bool operator==(const ParamRanges&) const = default;
};

// One uniform draw per field, in declaration order. Same seed, same params.
BifurcationParams sample_params(const ParamRanges& ranges, Rng& rng);

// Depth by which p exceeds the tube union: min over arcs of the centerline
// distance, minus the tube radius (clamped at zero inside).
PenetrationResult penetration(const LumenMap& map, Vec2 p);

// Precomputed arc data (centers, endpoints, sweep half-plane tests) for the
// relaxation inner loop, which issues millions of penetration queries per
// training run. Agrees with penetration() up to floating-point roundoff.
class PreparedLumen {
 public:
  explicit PreparedLumen(const LumenMap& map);

  PenetrationResult penetration(Vec2 p) const;
  double radius() const { return radius_; }

 private:
  struct PreparedArc {
    bool straight = true;
    Vec2 start;
    Vec2 tangent;     // straight arcs
    double length = 0.0;
    Vec2 center;      // curved arcs
    double r = 0.0;
    Vec2 u0;          // start - center
    Vec2 u1;          // end - center
    Vec2 end;
    bool ccw = true;
    bool major = false;  // sweep > pi
    bool full = false;   // sweep >= 2*pi
  };

  std::vector<PreparedArc> arcs_;
  double radius_ = 0.5;
};

// Closed goal disk: the boundary counts as inside.
bool in_goal(const LumenMap& map, Vec2 p);

nlohmann::json to_json(const LumenMap& map);
LumenMap lumen_map_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BifurcationParams& params);
BifurcationParams params_from_json(const nlohmann::json& j);

}  // namespace lumen::geom
