#include "lumen/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lumen/errors.hpp"
#include "lumen/json_util.hpp"

namespace lumen::render {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

struct Bounds {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool empty = true;

  void add(Vec2 p) {
    if (empty) {
      min_x = max_x = p.x;
      min_y = max_y = p.y;
      empty = false;
      return;
    }
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
};

// Centerline samples including both endpoints.
std::vector<geom::ArcPoint> sample_arc(const geom::CenterlineArc& arc, double ds) {
  const int n = std::max(2, static_cast<int>(std::ceil(arc.arclength / ds)) + 1);
  std::vector<geom::ArcPoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double s = arc.arclength * static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back(geom::point_on_arc(arc, s));
  }
  return out;
}

void append_polyline(std::ostringstream& svg, const std::vector<Vec2>& points,
                     const char* style) {
  svg << "  <polyline " << style << " points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0) svg << " ";
    svg << num(points[i].x) << "," << num(points[i].y);
  }
  svg << "\"/>\n";
}

}  // namespace

void RenderOptions::validate() const {
  if (!(scale > 0.0)) throw ValidationError("scale", "must be > 0");
  if (!(margin >= 0.0)) throw ValidationError("margin", "must be >= 0");
  if (!(sample_ds > 0.0)) throw ValidationError("sample_ds", "must be > 0");
}

std::string render_svg(const geom::LumenMap& map, const Frame& frame,
                       const RenderOptions& opts) {
  opts.validate();

  // Wall polylines: centerline offset by +/- radius along the local normal.
  std::vector<std::vector<Vec2>> walls;
  std::vector<std::vector<Vec2>> centerlines;
  Bounds bounds;
  for (const geom::CenterlineArc& arc : map.arcs) {
    const std::vector<geom::ArcPoint> samples = sample_arc(arc, opts.sample_ds);
    std::vector<Vec2> left, right, center;
    left.reserve(samples.size());
    right.reserve(samples.size());
    center.reserve(samples.size());
    for (const geom::ArcPoint& ap : samples) {
      const Vec2 n = ap.tangent.perp();
      left.push_back(ap.point + n * map.radius);
      right.push_back(ap.point - n * map.radius);
      center.push_back(ap.point);
      bounds.add(left.back());
      bounds.add(right.back());
    }
    walls.push_back(std::move(left));
    walls.push_back(std::move(right));
    centerlines.push_back(std::move(center));
  }
  bounds.add(map.goal_center + Vec2{map.goal_radius, map.goal_radius});
  bounds.add(map.goal_center - Vec2{map.goal_radius, map.goal_radius});
  for (const Vec2& p : frame.joints) bounds.add(p);

  const double s = opts.scale;
  const double width = (bounds.max_x - bounds.min_x + 2.0 * opts.margin) * s;
  const double height = (bounds.max_y - bounds.min_y + 2.0 * opts.margin) * s;
  const double tx = (opts.margin - bounds.min_x) * s;
  const double ty = (bounds.max_y + opts.margin) * s;
  const double wall_w = 2.0 / s;    // ~2 px strokes regardless of scale
  const double robot_w = 3.0 / s;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << " "
      << num(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // World units inside; the matrix flips y so +y points up on screen.
  svg << "<g transform=\"matrix(" << num(s) << " 0 0 " << num(-s) << " " << num(tx) << " "
      << num(ty) << ")\">\n";

  svg << "  <circle cx=\"" << num(map.goal_center.x) << "\" cy=\"" << num(map.goal_center.y)
      << "\" r=\"" << num(map.goal_radius)
      << "\" fill=\"#7bd389\" fill-opacity=\"0.45\" stroke=\"#2e7d32\" stroke-width=\""
      << num(wall_w) << "\"/>\n";

  {
    std::ostringstream style;
    style << "fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"" << num(wall_w)
          << "\" stroke-dasharray=\"" << num(8.0 / s) << " " << num(6.0 / s) << "\"";
    const std::string st = style.str();
    for (const std::vector<Vec2>& line : centerlines) append_polyline(svg, line, st.c_str());
  }
  {
    std::ostringstream style;
    style << "fill=\"none\" stroke=\"#37474f\" stroke-width=\"" << num(wall_w)
          << "\" stroke-linecap=\"round\"";
    const std::string st = style.str();
    for (const std::vector<Vec2>& wall : walls) append_polyline(svg, wall, st.c_str());
  }

  if (!frame.joints.empty()) {
    std::ostringstream style;
    style << "fill=\"none\" stroke=\"#c62828\" stroke-width=\"" << num(robot_w)
          << "\" stroke-linejoin=\"round\"";
    const std::string st = style.str();
    append_polyline(svg, frame.joints, st.c_str());
    for (std::size_t i = 0; i < frame.joints.size(); ++i) {
      const bool tip = i + 1 == frame.joints.size();
      svg << "  <circle cx=\"" << num(frame.joints[i].x) << "\" cy=\""
          << num(frame.joints[i].y) << "\" r=\"" << num((tip ? 5.0 : 3.0) / s)
          << "\" fill=\"" << (tip ? "#ff8f00" : "#c62828") << "\"/>\n";
    }
  }
  svg << "</g>\n";

  if (frame.step >= 0) {
    svg << "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">step "
        << frame.step << "  energy " << num(frame.energy) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

int render_trajectory(const geom::LumenMap& map, const std::vector<rl::TraceStep>& trace,
                      const std::filesystem::path& out_dir, int every,
                      const RenderOptions& opts) {
  if (every < 1) throw ValidationError("every", "must be >= 1");
  std::filesystem::create_directories(out_dir);

  int written = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool last = i + 1 == trace.size();
    if (i % static_cast<std::size_t>(every) != 0 && !last) continue;
    if (!trace[i].snapshot) continue;

    Frame frame;
    frame.joints = trace[i].snapshot->joints;
    frame.energy = trace[i].snapshot->energy;
    frame.step = static_cast<long>(i);

    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.svg", i);
    atomic_write_file(out_dir / name, render_svg(map, frame, opts));
    ++written;
  }
  return written;
}

}  // namespace lumen::render
